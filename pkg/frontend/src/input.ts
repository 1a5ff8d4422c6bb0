// Keyboard / gamepad joint-target capture. The device state is sampled at
// the send cadence (<= 60 Hz); keys ramp individual joints, gamepad axes
// map to joint velocities with a deadzone, the grip toggle is
// edge-triggered. Spectators never construct one of these.

export interface InputConfig {
  /** rad/s applied while a joint key is held */
  keyRate: number;
  axisRate: number;
  deadzone: number;
  qMin: number[];
  qMax: number[];
  /** [decKey, incKey] per joint, remappable from the settings pane */
  jointKeys: [string, string][];
  gripKey: string;
}

export const DEFAULT_CONFIG: InputConfig = {
  keyRate: 1.2,
  axisRate: 1.5,
  deadzone: 0.1,
  qMin: [-2.74, -1.78, -2.9, -3.04, -2.8, 0.54, -3.01],
  qMax: [2.74, 1.78, 2.9, -0.15, 2.8, 4.52, 3.01],
  jointKeys: [
    ["q", "a"],
    ["w", "s"],
    ["e", "d"],
    ["r", "f"],
    ["t", "g"],
    ["y", "h"],
    ["u", "j"],
  ],
  gripKey: " ",
};

export interface OperatorInputMsg {
  seq: number;
  target_q: number[];
  gripper_closed: boolean;
  client_timestamp: number;
}

export interface GamepadSnapshot {
  axes: number[];
  gripButton: boolean;
}

export class InputCapture {
  private readonly cfg: InputConfig;
  private target: number[];
  private gripClosed = false;
  private lastGripButton = false;
  private seq = 0;
  private held = new Set<string>();

  constructor(homeQ: number[], cfg: InputConfig = DEFAULT_CONFIG) {
    this.cfg = cfg;
    this.target = [...homeQ];
  }

  keyDown(key: string): void {
    if (key === this.cfg.gripKey) {
      // edge-triggered: repeat events while held must not re-toggle
      if (!this.held.has(key)) this.gripClosed = !this.gripClosed;
      this.held.add(key);
      return;
    }
    this.held.add(key);
  }

  keyUp(key: string): void {
    this.held.delete(key);
  }

  /** Reset to a fresh attempt: new seq space, hold position. */
  beginAttempt(homeQ: number[]): void {
    this.target = [...homeQ];
    this.gripClosed = false;
    this.seq = 0;
  }

  get targetQ(): readonly number[] {
    return this.target;
  }

  /** Advance targets from held keys + gamepad and emit one input message. */
  sample(dt: number, nowS: number, pad: GamepadSnapshot | null = null): OperatorInputMsg {
    for (let j = 0; j < this.target.length; j++) {
      const [dec, inc] = this.cfg.jointKeys[j] ?? ["", ""];
      let v = 0;
      if (this.held.has(inc)) v += this.cfg.keyRate;
      if (this.held.has(dec)) v -= this.cfg.keyRate;
      if (pad && j < pad.axes.length) {
        const axis = pad.axes[j];
        if (Math.abs(axis) > this.cfg.deadzone) v += axis * this.cfg.axisRate;
      }
      this.target[j] = clamp(this.target[j] + v * dt, this.cfg.qMin[j], this.cfg.qMax[j]);
    }
    if (pad) {
      if (pad.gripButton && !this.lastGripButton) this.gripClosed = !this.gripClosed;
      this.lastGripButton = pad.gripButton;
    }
    this.seq += 1;
    return {
      seq: this.seq,
      target_q: [...this.target],
      gripper_closed: this.gripClosed,
      client_timestamp: nowS,
    };
  }
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}
