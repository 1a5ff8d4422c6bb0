// Codec checks against the golden frames frozen by the backend. Floats such
// as 120.0 serialize differently in JS and Python, so JSON goldens are
// verified by decode + canonical round-trip rather than byte-for-byte
// re-encoding; the binary cloud frame has no such ambiguity and must match
// exactly.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import {
  BINARY_MAGIC,
  cloudToPoints,
  decode,
  encode,
  MalformedFrameError,
  MESSAGE_TYPES,
  PROTOCOL_VERSION,
} from "../src/protocol.js";

const GOLDENS = join(new URL(".", import.meta.url).pathname, "..", "..", "tests", "goldens");

function golden(type: string): Uint8Array {
  return new Uint8Array(readFileSync(join(GOLDENS, `${type}.bin`)));
}

describe("golden frames", () => {
  for (const type of MESSAGE_TYPES) {
    it(`decodes ${type}`, () => {
      const msg = decode(golden(type));
      expect(msg.type).toBe(type);
      expect(msg.version).toBe(PROTOCOL_VERSION);
    });
  }

  it("re-encodes the binary cloud golden byte-for-byte", () => {
    const bytes = golden("cloud_chunk");
    const msg = decode(bytes);
    expect(encode(msg)).toEqual(bytes);
  });

  it("JSON goldens survive a canonical round-trip", () => {
    for (const type of MESSAGE_TYPES) {
      if (type === "cloud_chunk") continue;
      const once = decode(golden(type));
      const twice = decode(encode(once));
      expect(twice).toEqual(once);
      // canonical form is a fixed point
      expect(encode(twice)).toEqual(encode(once));
    }
  });

  it("reads the documented fields of the state_update golden", () => {
    const msg = decode(golden("state_update"));
    const p = msg.payload as Record<string, unknown>;
    expect(p.state_seq).toBe(7);
    expect((p.q as number[]).length).toBe(7);
    expect((p.objects as unknown[]).length).toBe(1);
  });
});

describe("binary layout", () => {
  it("parses the header little-endian", () => {
    const bytes = golden("cloud_chunk");
    expect(bytes[0]).toBe(BINARY_MAGIC);
    const msg = decode(bytes);
    expect(msg.seq).toBe(11);
    expect(msg.cloud!.frameId).toBe(5);
    expect(msg.cloud!.xyzQ.length).toBe(16 * 3);
    // first point's x code = little-endian u16 at offset 14
    expect(msg.cloud!.xyzQ[0]).toBe(bytes[14] | (bytes[15] << 8));
  });

  it("dequantizes within extent/2^16 of the box", () => {
    const msg = decode(golden("cloud_chunk"));
    const lo = [0.1, -0.5, 0.0] as const;
    const hi = [0.8, 0.5, 0.9] as const;
    const pts = cloudToPoints(msg.cloud!, lo, hi);
    for (let i = 0; i < pts.length; i++) {
      const axis = i % 3;
      expect(pts[i]).toBeGreaterThanOrEqual(lo[axis] - 1e-6);
      expect(pts[i]).toBeLessThanOrEqual(hi[axis] + 1e-6);
    }
  });

  it("rejects a truncated cloud frame", () => {
    const bytes = golden("cloud_chunk").slice(0, 20);
    expect(() => decode(bytes)).toThrow(MalformedFrameError);
  });
});

describe("malformed frames", () => {
  const cases: [string, Uint8Array][] = [
    ["empty", new Uint8Array(0)],
    ["bad json", new TextEncoder().encode("{nope")],
    ["missing fields", new TextEncoder().encode('{"type":"event"}')],
    ["unknown type", new TextEncoder().encode('{"version":1,"type":"zap","seq":1,"payload":{}}')],
  ];
  for (const [name, bytes] of cases) {
    it(`rejects ${name}`, () => {
      expect(() => decode(bytes)).toThrow(MalformedFrameError);
    });
  }
});

describe("encode", () => {
  it("sorts keys and stays compact", () => {
    const bytes = encode({
      type: "event",
      seq: 2,
      version: 1,
      payload: { zz: 1, aa: { b: 2, a: 1 } },
    });
    expect(new TextDecoder().decode(bytes)).toBe(
      '{"payload":{"aa":{"a":1,"b":2},"zz":1},"seq":2,"type":"event","version":1}',
    );
  });
});
