// REST + WebSocket plumbing. Works in the browser and under node (tests
// inject a WebSocket constructor from the 'ws' package).

import { decode, encode, PROTOCOL_VERSION, type WireMessage } from "./protocol.js";
import type { LeaderboardEntry, LoginResult, TaskInfo } from "./types.js";

export async function login(baseUrl: string, username: string): Promise<LoginResult> {
  const r = await fetch(`${baseUrl}/login`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ username }),
  });
  if (!r.ok) throw new Error(`login failed: ${(await r.json()).error ?? r.status}`);
  return (await r.json()) as LoginResult;
}

export async function fetchTasks(baseUrl: string): Promise<TaskInfo[]> {
  const r = await fetch(`${baseUrl}/tasks`);
  if (!r.ok) throw new Error(`tasks failed: ${r.status}`);
  return ((await r.json()) as { tasks: TaskInfo[] }).tasks;
}

export async function fetchLeaderboard(baseUrl: string, top = 10): Promise<LeaderboardEntry[]> {
  const r = await fetch(`${baseUrl}/leaderboard?top=${top}`);
  if (!r.ok) throw new Error(`leaderboard failed: ${r.status}`);
  return ((await r.json()) as { entries: LeaderboardEntry[] }).entries;
}

export async function createSession(
  baseUrl: string,
  token: string,
  taskId: string,
  seed?: number,
  attempts?: number,
): Promise<{ session_id: string }> {
  const r = await fetch(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ token, task_id: taskId, seed, attempts }),
  });
  if (!r.ok) throw new Error(`session create failed: ${r.status}`);
  return (await r.json()) as { session_id: string };
}

export function sessionUrl(
  baseUrl: string,
  sessionId: string,
  role: "operator" | "spectator",
  token: string,
): string {
  const ws = baseUrl.replace(/^http/, "ws");
  return `${ws}/session/${sessionId}?role=${role}&token=${encodeURIComponent(token)}`;
}

/** Shareable read-only link for the current session. */
export function spectatorShareUrl(pageUrl: string, sessionId: string): string {
  const u = new URL(pageUrl);
  u.searchParams.set("watch", sessionId);
  return u.toString();
}

type WsLike = {
  binaryType: string;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onopen: (() => void) | null;
  send(data: Uint8Array | string): void;
  close(): void;
};

export type WsCtor = new (url: string) => WsLike;

export class SessionSocket {
  private ws: WsLike;
  onMessage: (msg: WireMessage) => void = () => {};
  onClose: () => void = () => {};

  constructor(url: string, ctor: WsCtor = WebSocket as unknown as WsCtor) {
    this.ws = new ctor(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onmessage = (ev) => {
      const data = ev.data;
      const bytes =
        typeof data === "string"
          ? new TextEncoder().encode(data)
          : new Uint8Array(data as ArrayBuffer);
      try {
        this.onMessage(decode(bytes));
      } catch {
        // a frame we cannot parse is the server's bug to report, not ours to crash on
      }
    };
    this.ws.onclose = () => this.onClose();
    this.ws.onerror = () => {};
  }

  opened(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.ws.onopen = () => resolve();
      this.ws.onerror = (e) => reject(e);
    });
  }

  sendInput(payload: Record<string, unknown>, seq: number): void {
    this.ws.send(encode({ type: "input", seq, version: PROTOCOL_VERSION, payload }));
  }

  close(): void {
    this.ws.close();
  }
}
