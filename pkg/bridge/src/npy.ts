/**
 * NPY v1.0 serialization for float32 C-order tensors of rank 2 or 3.
 *
 * The writer reproduces numpy's canonical byte layout (sorted dict keys,
 * space padding to a 64-byte aligned header, trailing newline) so files
 * written here are byte-identical to what numpy itself would emit.
 */

const MAGIC = Buffer.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY
const ALIGN = 64;

export interface Tensor {
  shape: number[];
  data: Float32Array;
}

export function tensorFrom(shape: number[], fill: (i: number) => number): Tensor {
  const n = shape.reduce((a, b) => a * b, 1);
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = fill(i);
  return { shape, data };
}

export function serializeNpy(t: Tensor): Buffer {
  if (t.shape.length !== 2 && t.shape.length !== 3) {
    throw new Error(`tensor rank must be 2 or 3, got ${t.shape.length}`);
  }
  const count = t.shape.reduce((a, b) => a * b, 1);
  if (count !== t.data.length) {
    throw new Error(`shape ${t.shape} needs ${count} values, got ${t.data.length}`);
  }
  const dict = `{'descr': '<f4', 'fortran_order': False, 'shape': (${t.shape.join(", ")}), }`;
  const unpadded = MAGIC.length + 2 + 2 + dict.length + 1; // version + hlen + newline
  const padded = ALIGN * Math.ceil(unpadded / ALIGN);
  const headerLen = padded - MAGIC.length - 2 - 2;
  const header = Buffer.alloc(padded);
  MAGIC.copy(header, 0);
  header[6] = 1; // version 1.0
  header[7] = 0;
  header.writeUInt16LE(headerLen, 8);
  header.write(dict, 10, "ascii");
  header.fill(0x20, 10 + dict.length, padded - 1);
  header[padded - 1] = 0x0a;

  const payload = Buffer.alloc(4 * count);
  for (let i = 0; i < count; i++) payload.writeFloatLE(t.data[i], 4 * i);
  return Buffer.concat([header, payload]);
}

export function parseNpy(buf: Buffer): Tensor {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error("not an NPY file");
  }
  if (buf[6] !== 1 || buf[7] !== 0) {
    throw new Error(`expected NPY version 1.0, got ${buf[6]}.${buf[7]}`);
  }
  const headerLen = buf.readUInt16LE(8);
  const dict = buf.subarray(10, 10 + headerLen).toString("ascii");
  if (!dict.includes("'<f4'")) throw new Error(`expected dtype <f4 in ${dict.trim()}`);
  if (!dict.includes("'fortran_order': False")) {
    throw new Error("fortran_order files are not supported");
  }
  const m = dict.match(/'shape':\s*\(([^)]*)\)/);
  if (!m) throw new Error("malformed NPY header: no shape");
  const shape = m[1].split(",").map((s) => s.trim()).filter((s) => s.length > 0)
    .map((s) => Number.parseInt(s, 10));
  const count = shape.reduce((a, b) => a * b, 1);
  const payload = buf.subarray(10 + headerLen);
  if (payload.length !== 4 * count) {
    throw new Error(`payload holds ${payload.length / 4} values, header promises ${count}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = payload.readFloatLE(4 * i);
  return { shape, data };
}
