// End-to-end smoke against the real backend: sign in, pick GroceryCheckout,
// drive the shipped success script through the operator socket, and verify
// the gamified events render into the HUD while a spectator view converges
// to the identical final state. Stands in for a browser run: it exercises
// the same client modules end to end, minus WebGL.

import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { WebSocket } from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Hud } from "../src/hud.js";
import { createSession, fetchLeaderboard, fetchTasks, login, SessionSocket, sessionUrl, type WsCtor } from "../src/net.js";
import { AppFlow } from "../src/pages.js";
import { ClientSessionView, type Role } from "../src/sessionView.js";

const REPO = join(new URL(".", import.meta.url).pathname, "..", "..");
const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

interface ScriptEntry {
  t: number;
  q: number[];
  grip: boolean;
}

function loadScript(task: string): ScriptEntry[] {
  const path = join(REPO, "src", "armplay", "data", "scripts", `${task}_success.jsonl`);
  return readFileSync(path, "utf-8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line) as ScriptEntry);
}

function watch(role: Role, sessionId: string, token: string) {
  const view = new ClientSessionView(role);
  const hud = new Hud();
  hud.unmute();
  const socket = new SessionSocket(
    sessionUrl(BASE, sessionId, role, token),
    WebSocket as unknown as WsCtor,
  );
  const done = new Promise<void>((resolve) => {
    socket.onMessage = (msg) => {
      view.apply(msg, Date.now());
      for (const ev of view.drainEvents()) hud.applyEvent(ev, Date.now());
      hud.syncOverlay(view.overlay);
      if (msg.type === "session_end") resolve();
    };
    socket.onClose = () => resolve();
  });
  return { view, hud, socket, done };
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "armplay-web-"));
  server = spawn(
    "python3",
    ["-m", "armplay.cli", "serve", "--port", String(PORT), "--data-dir", dataDir],
    { stdio: "ignore" },
  );
  for (let i = 0; i < 100; i++) {
    try {
      await fetchTasks(BASE);
      return;
    } catch {
      await new Promise((r) => setTimeout(r, 200));
    }
  }
  throw new Error("backend did not come up");
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("scripted session", () => {
  it("plays GroceryCheckout end to end with a spectator in sync", async () => {
    const flow = new AppFlow();
    const auth = await login(BASE, "smoke-driver");
    flow.signedIn(auth, await fetchTasks(BASE));
    expect(flow.page).toBe("tasks");
    expect(flow.tasks.map((t) => t.id)).toContain("GroceryCheckout");

    const { session_id } = await createSession(BASE, auth.token, "GroceryCheckout", 7, 1);
    flow.startSession("GroceryCheckout", session_id);

    const op = watch("operator", session_id, auth.token);
    const specAuth = await login(BASE, "smoke-watcher");
    const spec = watch("spectator", session_id, specAuth.token);

    // drive the canned input sequence, paced by the authoritative clock
    const script = loadScript("GroceryCheckout");
    let seq = 0;
    let base: { clock: number; at: number } | null = null;
    const pump = setInterval(() => {
      const s = op.view.state;
      if (!s || s.phase !== "playing") return;
      if (!base || s.clock >= base.clock) base = { clock: s.clock, at: Date.now() };
      const clock = base.clock + (Date.now() - base.at) / 1000;
      let entry = script[0];
      for (const e of script) {
        if (e.t <= clock) entry = e;
        else break;
      }
      seq += 1;
      op.socket.sendInput(
        { seq, target_q: entry.q, gripper_closed: entry.grip, client_timestamp: clock },
        seq,
      );
    }, 1000 / 60);

    await Promise.all([op.done, spec.done]);
    clearInterval(pump);

    // gamified events all rendered on the operator HUD
    expect(op.hud.eventLog).toContain("scan_beep");
    expect(op.hud.eventLog).toContain("receipt_check");
    expect(op.hud.eventLog).toContain("confetti");
    expect(op.hud.beepCount).toBeGreaterThan(0);
    expect(op.hud.receipt.length).toBeGreaterThan(0);
    expect(op.hud.receipt.every((r) => r.checked)).toBe(true);

    // post-task page shows the awarded points
    flow.sessionEnded(op.view.end!, await fetchLeaderboard(BASE));
    expect(flow.page).toBe("posttask");
    expect(flow.postTask!.end.total_points).toBeGreaterThan(0);
    expect(flow.postTask!.leaderboard.some((e) => e.username === "smoke-driver")).toBe(true);

    // spectator converged to the identical final state
    expect(spec.view.end).not.toBeNull();
    expect(spec.view.state!.state_seq).toBe(op.view.state!.state_seq);
    expect(spec.view.state!.q).toEqual(op.view.state!.q);
    expect(spec.view.state!.objects).toEqual(op.view.state!.objects);
    expect(spec.view.state!.stages).toEqual(op.view.state!.stages);
    expect(spec.view.state!.score).toEqual(op.view.state!.score);
    expect(spec.hud.eventLog).toContain("confetti");
  }, 120000);
});
