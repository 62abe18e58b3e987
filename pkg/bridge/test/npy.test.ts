import { describe, expect, it } from "vitest";

import { parseNpy, serializeNpy, tensorFrom } from "../src/npy.js";

describe("npy serialization", () => {
  it("writes the canonical v1.0 header", () => {
    const buf = serializeNpy(tensorFrom([2, 3, 4], () => 0));
    expect(buf.subarray(0, 6)).toEqual(Buffer.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]));
    expect(buf[6]).toBe(1);
    expect(buf[7]).toBe(0);
    const headerLen = buf.readUInt16LE(8);
    expect((10 + headerLen) % 64).toBe(0);
    const header = buf.subarray(10, 10 + headerLen).toString("ascii");
    const dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3, 4), }";
    expect(header).toBe(dict + " ".repeat(headerLen - dict.length - 1) + "\n");
    expect(buf.length).toBe(10 + headerLen + 4 * 24);
  });

  it("round trips values bit-exactly", () => {
    const t = tensorFrom([3, 5, 7], (i) => Math.sin(i) * 1e3);
    const back = parseNpy(serializeNpy(t));
    expect(back.shape).toEqual([3, 5, 7]);
    expect(Array.from(back.data)).toEqual(Array.from(t.data));
  });

  it("round trips rank-2 maps", () => {
    const t = tensorFrom([4, 6], (i) => i / 7);
    const back = parseNpy(serializeNpy(t));
    expect(back.shape).toEqual([4, 6]);
    expect(Array.from(back.data)).toEqual(Array.from(t.data));
  });

  it("rejects rank-1 tensors", () => {
    expect(() => serializeNpy({ shape: [4], data: new Float32Array(4) })).toThrow(/rank/);
  });

  it("rejects length mismatches", () => {
    expect(() => serializeNpy({ shape: [2, 2], data: new Float32Array(3) })).toThrow(/values/);
  });

  it("rejects non-npy buffers", () => {
    expect(() => parseNpy(Buffer.from("plainly not a tensor"))).toThrow(/NPY/);
  });

  it("rejects truncated payloads", () => {
    const buf = serializeNpy(tensorFrom([2, 2], () => 1));
    expect(() => parseNpy(buf.subarray(0, buf.length - 4))).toThrow(/payload/);
  });
});
