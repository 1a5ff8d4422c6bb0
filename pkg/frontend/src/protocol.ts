// Wire protocol codec, version 1. Mirrors docs/PROTOCOL.md: JSON envelopes
// with sorted keys, plus a binary point-cloud frame starting with 0x00.

export const PROTOCOL_VERSION = 1;
export const BINARY_MAGIC = 0x00;
const HEADER_SIZE = 14; // magic u8, version u8, seq u32, frame_id u32, count u32

export const MESSAGE_TYPES = [
  "hello",
  "auth",
  "join_operator",
  "join_spectator",
  "input",
  "state_update",
  "overlay_update",
  "event",
  "cloud_chunk",
  "session_end",
  "leaderboard_update",
  "error",
] as const;

export type MessageType = (typeof MESSAGE_TYPES)[number];

export interface PointCloudChunk {
  frameId: number;
  /** length 3*count, row-major x,y,z codes */
  xyzQ: Uint16Array;
  /** length 3*count, row-major r,g,b */
  rgb: Uint8Array;
}

export interface WireMessage {
  type: MessageType;
  seq: number;
  version: number;
  payload: Record<string, unknown>;
  cloud?: PointCloudChunk;
}

export class MalformedFrameError extends Error {}

function canonicalize(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(canonicalize);
  if (value !== null && typeof value === "object") {
    const src = value as Record<string, unknown>;
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(src).sort()) out[key] = canonicalize(src[key]);
    return out;
  }
  return value;
}

export function encode(msg: WireMessage): Uint8Array {
  if (!MESSAGE_TYPES.includes(msg.type)) {
    throw new MalformedFrameError(`unknown message type ${msg.type}`);
  }
  if (msg.type === "cloud_chunk") {
    const c = msg.cloud;
    if (!c) throw new MalformedFrameError("cloud_chunk requires cloud data");
    const count = c.xyzQ.length / 3;
    const buf = new ArrayBuffer(HEADER_SIZE + count * 9);
    const view = new DataView(buf);
    view.setUint8(0, BINARY_MAGIC);
    view.setUint8(1, msg.version);
    view.setUint32(2, msg.seq, true);
    view.setUint32(6, c.frameId, true);
    view.setUint32(10, count, true);
    let off = HEADER_SIZE;
    for (let i = 0; i < count * 3; i++, off += 2) view.setUint16(off, c.xyzQ[i], true);
    new Uint8Array(buf, off).set(c.rgb);
    return new Uint8Array(buf);
  }
  const body = canonicalize({
    version: msg.version,
    type: msg.type,
    seq: msg.seq,
    payload: msg.payload,
  });
  return new TextEncoder().encode(JSON.stringify(body));
}

export function decode(data: Uint8Array): WireMessage {
  if (data.length === 0) throw new MalformedFrameError("empty frame");
  if (data[0] === BINARY_MAGIC) {
    if (data.length < HEADER_SIZE) throw new MalformedFrameError("truncated binary header");
    const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
    const version = view.getUint8(1);
    const seq = view.getUint32(2, true);
    const frameId = view.getUint32(6, true);
    const count = view.getUint32(10, true);
    if (data.length !== HEADER_SIZE + count * 9) {
      throw new MalformedFrameError(
        `binary frame length ${data.length} != expected ${HEADER_SIZE + count * 9}`,
      );
    }
    const xyzQ = new Uint16Array(count * 3);
    let off = HEADER_SIZE;
    for (let i = 0; i < count * 3; i++, off += 2) xyzQ[i] = view.getUint16(off, true);
    const rgb = data.slice(off, off + count * 3);
    return {
      type: "cloud_chunk",
      seq,
      version,
      payload: {},
      cloud: { frameId, xyzQ, rgb },
    };
  }
  let body: Record<string, unknown>;
  try {
    body = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(data));
  } catch (e) {
    throw new MalformedFrameError(`invalid frame: ${(e as Error).message}`);
  }
  for (const key of ["version", "type", "seq", "payload"]) {
    if (!(key in body)) throw new MalformedFrameError(`missing field '${key}'`);
  }
  const type = body.type as MessageType;
  if (!MESSAGE_TYPES.includes(type)) {
    throw new MalformedFrameError(`unknown message type ${String(body.type)}`);
  }
  return {
    type,
    seq: body.seq as number,
    version: body.version as number,
    payload: body.payload as Record<string, unknown>,
  };
}

/** Dequantize a cloud chunk back to meters against the workspace box. */
export function cloudToPoints(
  chunk: PointCloudChunk,
  lo: readonly [number, number, number],
  hi: readonly [number, number, number],
): Float32Array {
  const n = chunk.xyzQ.length;
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    const axis = i % 3;
    out[i] = lo[axis] + (chunk.xyzQ[i] / 65535) * (hi[axis] - lo[axis]);
  }
  return out;
}
