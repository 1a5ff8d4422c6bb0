// Three.js scene: virtual arm posed from q, streamed point cloud, goal
// outlines, end-effector beam, camera follow. The DH math lives here too
// so tests can check posing without a WebGL context.

import * as THREE from "three";
import { cloudToPoints, type PointCloudChunk } from "./protocol.js";
import type { CameraHint, ObjectView, OverlayUpdate, StateUpdate } from "./types.js";

// Mirrors armplay/data/arm.yaml (armplay/arm-v1); rows a, d, alpha, theta_offset.
export const DH_ROWS: [number, number, number, number][] = [
  [0.0, 0.333, -Math.PI / 2, 0.0],
  [0.0, 0.0, Math.PI / 2, 0.0],
  [0.0825, 0.316, Math.PI / 2, 0.0],
  [-0.0825, 0.0, -Math.PI / 2, 0.0],
  [0.0, 0.384, Math.PI / 2, 0.0],
  [0.088, 0.0, Math.PI / 2, 0.0],
  [0.0, 0.207, 0.0, 0.0],
];

export const WORKSPACE_LO: [number, number, number] = [0.1, -0.5, 0.0];
export const WORKSPACE_HI: [number, number, number] = [0.8, 0.5, 0.9];

/** Standard-DH link transform; for display only, the server owns physics. */
export function dhMatrix(a: number, d: number, alpha: number, theta: number): THREE.Matrix4 {
  const ct = Math.cos(theta);
  const st = Math.sin(theta);
  const ca = Math.cos(alpha);
  const sa = Math.sin(alpha);
  // prettier-ignore
  return new THREE.Matrix4().set(
    ct, -st * ca,  st * sa, a * ct,
    st,  ct * ca, -ct * sa, a * st,
    0,        sa,       ca,      d,
    0,         0,        0,      1,
  );
}

export function jointFrames(q: number[]): THREE.Matrix4[] {
  const frames: THREE.Matrix4[] = [];
  const acc = new THREE.Matrix4();
  for (let i = 0; i < DH_ROWS.length; i++) {
    const [a, d, alpha, off] = DH_ROWS[i];
    acc.multiply(dhMatrix(a, d, alpha, off + q[i]));
    frames.push(acc.clone());
  }
  return frames;
}

const LINK_RADIUS = 0.03;

export class ArmScene {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private readonly linkBones: THREE.Object3D[] = [];
  private readonly gripperTip: THREE.Mesh;
  private readonly beam: THREE.Line;
  private readonly cloudPoints: THREE.Points;
  private readonly cloudGeom = new THREE.BufferGeometry();
  private readonly objectMeshes = new Map<string, THREE.Mesh>();
  private readonly outlineGroup = new THREE.Group();

  constructor(aspect = 16 / 9) {
    this.camera = new THREE.PerspectiveCamera(50, aspect, 0.01, 10);
    this.camera.position.set(1.2, -0.9, 0.9);
    this.camera.up.set(0, 0, 1);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 1.0);
    sun.position.set(1, -1, 2);
    this.scene.add(sun);

    const table = new THREE.Mesh(
      new THREE.BoxGeometry(0.9, 1.1, 0.02),
      new THREE.MeshLambertMaterial({ color: 0x5a5a64 }),
    );
    table.position.set(0.45, 0, -0.01);
    this.scene.add(table);

    for (let i = 0; i < DH_ROWS.length; i++) {
      const bone = new THREE.Mesh(
        new THREE.CapsuleGeometry(LINK_RADIUS, 0.1, 4, 8),
        new THREE.MeshLambertMaterial({ color: 0xdcdce6 }),
      );
      this.linkBones.push(bone);
      this.scene.add(bone);
    }
    this.gripperTip = new THREE.Mesh(
      new THREE.SphereGeometry(0.025, 12, 12),
      new THREE.MeshLambertMaterial({ color: 0x3974ff }),
    );
    this.scene.add(this.gripperTip);

    this.beam = new THREE.Line(
      new THREE.BufferGeometry().setFromPoints([new THREE.Vector3(), new THREE.Vector3()]),
      new THREE.LineBasicMaterial({ color: 0x62e0a0 }),
    );
    this.scene.add(this.beam);

    this.cloudPoints = new THREE.Points(
      this.cloudGeom,
      new THREE.PointsMaterial({ size: 0.006, vertexColors: true }),
    );
    this.scene.add(this.cloudPoints);
    this.scene.add(this.outlineGroup);
  }

  /** Pose everything from the latest authoritative state. */
  syncState(state: StateUpdate, graspHighlight: boolean): void {
    const frames = jointFrames(state.q);
    let prev = new THREE.Vector3(0, 0, 0);
    for (let i = 0; i < frames.length; i++) {
      const pos = new THREE.Vector3().setFromMatrixPosition(frames[i]);
      poseCapsuleBetween(this.linkBones[i], prev, pos);
      prev = pos;
    }
    this.gripperTip.position.set(...state.ee.position);
    (this.gripperTip.material as THREE.MeshLambertMaterial).color.set(
      graspHighlight ? 0xffc832 : 0x3974ff,
    );
    for (const obj of state.objects) this.syncObject(obj);
    this.followCamera(state.camera);
  }

  private syncObject(obj: ObjectView): void {
    let mesh = this.objectMeshes.get(obj.id);
    if (!mesh) {
      mesh = new THREE.Mesh(
        new THREE.BoxGeometry(0.06, 0.06, 0.08),
        new THREE.MeshLambertMaterial(),
      );
      this.objectMeshes.set(obj.id, mesh);
      this.scene.add(mesh);
    }
    mesh.position.set(...obj.position);
    const [w, x, y, z] = obj.orientation;
    mesh.quaternion.set(x, y, z, w);
    (mesh.material as THREE.MeshLambertMaterial).color.setRGB(
      obj.color[0] / 255,
      obj.color[1] / 255,
      obj.color[2] / 255,
    );
    (mesh.material as THREE.MeshLambertMaterial).emissive.set(obj.attached ? 0x332200 : 0x000000);
  }

  private followCamera(hint: CameraHint): void {
    const target = new THREE.Vector3(...hint.follow_target);
    this.camera.lookAt(target);
    const { origin, direction, table_point } = hint.beam;
    const from = new THREE.Vector3(...origin);
    const to = table_point
      ? new THREE.Vector3(...table_point)
      : from.clone().addScaledVector(new THREE.Vector3(...direction), 0.5);
    this.beam.geometry.setFromPoints([from, to]);
  }

  syncCloud(chunk: PointCloudChunk): void {
    const xyz = cloudToPoints(chunk, WORKSPACE_LO, WORKSPACE_HI);
    const rgb = new Float32Array(chunk.rgb.length);
    for (let i = 0; i < chunk.rgb.length; i++) rgb[i] = chunk.rgb[i] / 255;
    this.cloudGeom.setAttribute("position", new THREE.BufferAttribute(xyz, 3));
    this.cloudGeom.setAttribute("color", new THREE.BufferAttribute(rgb, 3));
  }

  /** Scene-sketch outlines for layout goals; other kinds render in the HUD. */
  syncOverlay(overlay: OverlayUpdate): void {
    this.outlineGroup.clear();
    const outlines = overlay.outlines as { ref: string; polygon: [number, number][] }[] | undefined;
    if (!outlines) return;
    for (const o of outlines) {
      const pts = o.polygon.map(([x, y]) => new THREE.Vector3(x, y, 0.002));
      pts.push(pts[0].clone());
      const loop = new THREE.Line(
        new THREE.BufferGeometry().setFromPoints(pts),
        new THREE.LineBasicMaterial({ color: 0x62e0a0 }),
      );
      this.outlineGroup.add(loop);
    }
  }
}

function poseCapsuleBetween(obj: THREE.Object3D, a: THREE.Vector3, b: THREE.Vector3): void {
  const mid = a.clone().add(b).multiplyScalar(0.5);
  obj.position.copy(mid);
  const dir = b.clone().sub(a);
  const len = dir.length();
  obj.scale.set(1, Math.max(len / 0.1, 0.2), 1);
  if (len > 1e-9) {
    obj.quaternion.setFromUnitVectors(new THREE.Vector3(0, 1, 0), dir.normalize());
  }
}
