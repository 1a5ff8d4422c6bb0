// The display-side DH math must agree with the backend's kinematics, or the
// virtual arm drifts away from the authoritative end-effector marker.

import { describe, expect, it } from "vitest";
import * as THREE from "three";
import { DH_ROWS, jointFrames } from "../src/render.js";

describe("jointFrames", () => {
  it("matches the backend forward kinematics at the home pose", () => {
    // reference position computed with the test-suite kinematics oracle
    // for q = home_q from armplay/data/arm.yaml
    const q = [0.0, -0.2, 0.0, -2.0, 0.0, 2.0, 0.785];
    const frames = jointFrames(q);
    const ee = new THREE.Vector3().setFromMatrixPosition(frames[6]);
    expect(ee.x).toBeCloseTo(0.538148058, 6);
    expect(ee.y).toBeCloseTo(0.0, 6);
    expect(ee.z).toBeCloseTo(0.466797203, 6);
  });

  it("has seven links and returns one frame per link", () => {
    expect(DH_ROWS.length).toBe(7);
    expect(jointFrames(new Array(7).fill(0)).length).toBe(7);
  });

  it("first joint rotates about the base z axis", () => {
    const a = jointFrames([0, 0, 0, 0, 0, 0, 0]);
    const b = jointFrames([Math.PI / 2, 0, 0, 0, 0, 0, 0]);
    const pa = new THREE.Vector3().setFromMatrixPosition(a[6]);
    const pb = new THREE.Vector3().setFromMatrixPosition(b[6]);
    // same radius from the z axis, same height
    expect(Math.hypot(pa.x, pa.y)).toBeCloseTo(Math.hypot(pb.x, pb.y), 9);
    expect(pa.z).toBeCloseTo(pb.z, 9);
  });
});
