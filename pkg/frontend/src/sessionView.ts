// ClientSessionView: the reducer every rendered frame reads from. Renders
// only server-authoritative state -- no client-side prediction of task
// outcomes; all HUD changes are event-driven.

import type { WireMessage, PointCloudChunk } from "./protocol.js";
import type { GameEvent, OverlayUpdate, SessionEnd, StateUpdate } from "./types.js";

export type Role = "operator" | "spectator";
export type ConnectionStatus = "connecting" | "live" | "stale" | "ended" | "error";

const STALE_AFTER_MS = 1000;

export class ClientSessionView {
  readonly role: Role;
  state: StateUpdate | null = null;
  overlay: OverlayUpdate | null = null;
  cloud: PointCloudChunk | null = null;
  end: SessionEnd | null = null;
  lastError: string | null = null;
  /** drained by the HUD once per rendered frame */
  pendingEvents: GameEvent[] = [];
  private lastStateAt = -Infinity;
  private closed = false;

  constructor(role: Role) {
    this.role = role;
  }

  /** Feed one decoded message; out-of-date droppable frames are ignored. */
  apply(msg: WireMessage, nowMs: number): void {
    switch (msg.type) {
      case "state_update": {
        const s = msg.payload as unknown as StateUpdate;
        // droppable stream: latest-wins, never regress
        if (this.state === null || s.state_seq >= this.state.state_seq) {
          this.state = s;
          this.lastStateAt = nowMs;
        }
        break;
      }
      case "overlay_update":
        this.overlay = msg.payload as unknown as OverlayUpdate;
        break;
      case "cloud_chunk":
        if (msg.cloud && (this.cloud === null || msg.cloud.frameId >= this.cloud.frameId)) {
          this.cloud = msg.cloud;
        }
        break;
      case "event":
        this.pendingEvents.push(msg.payload as unknown as GameEvent);
        break;
      case "session_end":
        this.end = msg.payload as unknown as SessionEnd;
        break;
      case "error":
        this.lastError = String(msg.payload.code ?? "unknown");
        break;
      default:
        break; // hello / leaderboard handled by the page layer
    }
  }

  markClosed(): void {
    this.closed = true;
  }

  drainEvents(): GameEvent[] {
    const out = this.pendingEvents;
    this.pendingEvents = [];
    return out;
  }

  status(nowMs: number): ConnectionStatus {
    if (this.lastError !== null && this.state === null) return "error";
    if (this.end !== null || this.closed) return "ended";
    if (this.state === null) return "connecting";
    return nowMs - this.lastStateAt > STALE_AFTER_MS ? "stale" : "live";
  }

  /** Progress bar fill, 0..1, from the authoritative clock. */
  progress(): number {
    if (!this.state || this.state.time_limit <= 0) return 0;
    return Math.min(1, Math.max(0, this.state.clock / this.state.time_limit));
  }
}
