// HUD model: progress bar, receipt checklist, stage pips, confetti burst,
// grasp highlight. Pure state + timers so it is testable without a DOM;
// hudDom.ts (in main.ts) projects this onto elements each frame.

import type { GameEvent, OverlayUpdate, StageView } from "./types.js";

const GRASP_HIGHLIGHT_MS = 500;
const CONFETTI_MS = 2500;
const CONFETTI_PARTICLES = 120;

export interface ReceiptRow {
  ref: string;
  checked: boolean;
}

export interface ConfettiParticle {
  x: number;
  y: number;
  vx: number;
  vy: number;
  hue: number;
}

export class Hud {
  receipt: ReceiptRow[] = [];
  stages: StageView[] = [];
  progressFill = 0;
  score = 0;
  graspHighlightUntil = -Infinity;
  confettiUntil = -Infinity;
  confetti: ConfettiParticle[] = [];
  banner: string | null = null;
  /** kinds seen, for tests and the event ticker */
  eventLog: string[] = [];
  private muted = true;
  private beeps = 0;

  /** Audio stays muted until a user gesture, per autoplay policy. */
  unmute(): void {
    this.muted = false;
  }

  get beepCount(): number {
    return this.beeps;
  }

  syncOverlay(overlay: OverlayUpdate | null): void {
    if (!overlay) return;
    if (overlay.kind === "receipt_list" && Array.isArray(overlay.items)) {
      const items = overlay.items as { ref: string; checked: boolean }[];
      this.receipt = items.map((it) => ({ ref: it.ref, checked: it.checked }));
    }
  }

  syncState(stages: StageView[], progressFill: number, score: number): void {
    this.stages = stages;
    this.progressFill = progressFill;
    this.score = score;
  }

  applyEvent(ev: GameEvent, nowMs: number): void {
    this.eventLog.push(ev.kind);
    switch (ev.kind) {
      case "grasp_highlight":
        this.graspHighlightUntil = nowMs + GRASP_HIGHLIGHT_MS;
        break;
      case "scan_beep":
        if (!this.muted) this.beeps += 1;
        break;
      case "receipt_check": {
        const row = this.receipt.find((r) => r.ref === ev.object && !r.checked);
        if (row) row.checked = true;
        break;
      }
      case "confetti":
        this.confettiUntil = nowMs + CONFETTI_MS;
        this.confetti = spawnConfetti();
        break;
      case "time_warning":
        this.banner = "Hurry!";
        break;
      case "attempt_end":
        this.banner = ev.success ? "Task complete!" : "Attempt over";
        break;
      case "attempt_start":
        this.banner = null;
        this.graspHighlightUntil = -Infinity;
        break;
      default:
        break;
    }
  }

  graspHighlighted(nowMs: number): boolean {
    return nowMs < this.graspHighlightUntil;
  }

  confettiActive(nowMs: number): boolean {
    return nowMs < this.confettiUntil;
  }

  /** Advance confetti physics; particles clear themselves when expired. */
  tick(nowMs: number, dt: number): void {
    if (!this.confettiActive(nowMs)) {
      this.confetti = [];
      return;
    }
    for (const p of this.confetti) {
      p.x += p.vx * dt;
      p.y += p.vy * dt;
      p.vy += 900 * dt; // gravity, px/s^2
    }
  }
}

function spawnConfetti(): ConfettiParticle[] {
  const out: ConfettiParticle[] = [];
  for (let i = 0; i < CONFETTI_PARTICLES; i++) {
    const angle = (i / CONFETTI_PARTICLES) * Math.PI * 2;
    const speed = 150 + 200 * ((i * 7919) % 13) / 13;
    out.push({
      x: 0.5,
      y: 0.4,
      vx: Math.cos(angle) * speed,
      vy: Math.sin(angle) * speed - 250,
      hue: (i * 137) % 360,
    });
  }
  return out;
}
