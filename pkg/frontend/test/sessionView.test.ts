import { describe, expect, it } from "vitest";
import type { WireMessage } from "../src/protocol.js";
import { ClientSessionView } from "../src/sessionView.js";
import type { StateUpdate } from "../src/types.js";

function stateMsg(seq: number, clock = 0): WireMessage {
  const payload: Partial<StateUpdate> = {
    state_seq: seq,
    phase: "playing",
    clock,
    time_limit: 120,
    q: new Array(7).fill(0),
    stages: [],
    score: 0,
  };
  return { type: "state_update", seq, version: 1, payload: payload as never };
}

describe("ClientSessionView", () => {
  it("keeps the newest state and never regresses", () => {
    const view = new ClientSessionView("spectator");
    view.apply(stateMsg(5), 0);
    view.apply(stateMsg(3), 1); // stale delivery after a drop
    expect(view.state!.state_seq).toBe(5);
    view.apply(stateMsg(6), 2);
    expect(view.state!.state_seq).toBe(6);
  });

  it("queues events until the frame drains them, in order", () => {
    const view = new ClientSessionView("operator");
    for (const kind of ["attempt_start", "scan_beep", "confetti"]) {
      view.apply({ type: "event", seq: 1, version: 1, payload: { kind, t: 0 } }, 0);
    }
    expect(view.drainEvents().map((e) => e.kind)).toEqual([
      "attempt_start",
      "scan_beep",
      "confetti",
    ]);
    expect(view.drainEvents()).toEqual([]);
  });

  it("reports connecting, live, stale, ended", () => {
    const view = new ClientSessionView("operator");
    expect(view.status(0)).toBe("connecting");
    view.apply(stateMsg(1), 100);
    expect(view.status(200)).toBe("live");
    expect(view.status(1200)).toBe("stale"); // > 1 s without updates
    view.apply(
      { type: "session_end", seq: 9, version: 1, payload: { final_state_seq: 1 } },
      1300,
    );
    expect(view.status(1300)).toBe("ended");
  });

  it("computes progress from the authoritative clock only", () => {
    const view = new ClientSessionView("operator");
    view.apply(stateMsg(1, 30), 0);
    expect(view.progress()).toBeCloseTo(30 / 120);
    view.apply(stateMsg(2, 999), 1);
    expect(view.progress()).toBe(1);
  });

  it("keeps the newest cloud by frame id", () => {
    const view = new ClientSessionView("spectator");
    const chunk = (frameId: number) => ({
      type: "cloud_chunk" as const,
      seq: frameId,
      version: 1,
      payload: {},
      cloud: { frameId, xyzQ: new Uint16Array(3), rgb: new Uint8Array(3) },
    });
    view.apply(chunk(4), 0);
    view.apply(chunk(2), 1);
    expect(view.cloud!.frameId).toBe(4);
  });
});
