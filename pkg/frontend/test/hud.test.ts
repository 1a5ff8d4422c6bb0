import { describe, expect, it } from "vitest";
import { Hud } from "../src/hud.js";

describe("Hud", () => {
  it("highlights the gripper for 500 ms after a grasp event", () => {
    const hud = new Hud();
    hud.applyEvent({ kind: "grasp_highlight", t: 1, object: "cup" }, 1000);
    expect(hud.graspHighlighted(1400)).toBe(true);
    expect(hud.graspHighlighted(1501)).toBe(false);
  });

  it("checks off receipt rows on receipt_check events", () => {
    const hud = new Hud();
    hud.syncOverlay({
      kind: "receipt_list",
      items: [
        { ref: "cereal", checked: false },
        { ref: "soup", checked: false },
      ],
    });
    hud.applyEvent({ kind: "receipt_check", t: 2, object: "soup" }, 0);
    expect(hud.receipt).toEqual([
      { ref: "cereal", checked: false },
      { ref: "soup", checked: true },
    ]);
  });

  it("re-syncing the overlay keeps server-marked checks", () => {
    const hud = new Hud();
    hud.syncOverlay({ kind: "receipt_list", items: [{ ref: "cereal", checked: true }] });
    expect(hud.receipt[0].checked).toBe(true);
  });

  it("bursts confetti and clears it after its lifetime", () => {
    const hud = new Hud();
    hud.applyEvent({ kind: "confetti", t: 9 }, 0);
    expect(hud.confettiActive(1000)).toBe(true);
    expect(hud.confetti.length).toBeGreaterThan(0);
    const x0 = hud.confetti[0].x;
    hud.tick(1000, 0.016);
    expect(hud.confetti[0].x).not.toBe(x0);
    hud.tick(3000, 0.016); // past the 2.5 s lifetime
    expect(hud.confettiActive(3000)).toBe(false);
    expect(hud.confetti).toEqual([]);
  });

  it("stays silent until unmuted by a user gesture", () => {
    const hud = new Hud();
    hud.applyEvent({ kind: "scan_beep", t: 1, object: "cereal" }, 0);
    expect(hud.beepCount).toBe(0);
    hud.unmute();
    hud.applyEvent({ kind: "scan_beep", t: 2, object: "soup" }, 0);
    expect(hud.beepCount).toBe(1);
  });

  it("banners attempt results straight from the event payload", () => {
    const hud = new Hud();
    hud.applyEvent({ kind: "attempt_end", t: 40, success: true }, 0);
    expect(hud.banner).toBe("Task complete!");
    hud.applyEvent({ kind: "attempt_start", t: 0 }, 0);
    expect(hud.banner).toBeNull();
  });
});
