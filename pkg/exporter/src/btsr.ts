/**
 * BTSR tensor files: magic "BTSR", u32 LE version (1), u8 dtype
 * (1 = f32, 2 = f64), u8 rank, rank x u64 LE dims, then the row-major
 * IEEE-754 LE payload. Byte-for-byte the format the colorization pipeline
 * reads and writes.
 */

import * as fs from "node:fs";

const MAGIC = Buffer.from("BTSR", "ascii");
const VERSION = 1;

export type Dtype = "f32" | "f64";

export interface BtsrArray {
  dtype: Dtype;
  shape: number[];
  /** row-major values, length = product of shape */
  data: Float32Array | Float64Array;
}

function elementCount(shape: number[]): number {
  let n = 1;
  for (const d of shape) {
    if (!Number.isInteger(d) || d < 1) {
      throw new Error(`bad dimension ${d} in shape [${shape}]`);
    }
    n *= d;
  }
  return n;
}

export function encodeBtsr(arr: BtsrArray): Buffer {
  const n = elementCount(arr.shape);
  if (arr.data.length !== n) {
    throw new Error(
      `data length ${arr.data.length} does not match shape [${arr.shape}]`
    );
  }
  const itemSize = arr.dtype === "f32" ? 4 : 8;
  const header = Buffer.alloc(4 + 4 + 1 + 1 + 8 * arr.shape.length);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt8(arr.dtype === "f32" ? 1 : 2, 8);
  header.writeUInt8(arr.shape.length, 9);
  for (let i = 0; i < arr.shape.length; i++) {
    header.writeBigUInt64LE(BigInt(arr.shape[i]), 10 + 8 * i);
  }
  const payload = Buffer.alloc(n * itemSize);
  if (arr.dtype === "f32") {
    for (let i = 0; i < n; i++) payload.writeFloatLE(arr.data[i], 4 * i);
  } else {
    for (let i = 0; i < n; i++) payload.writeDoubleLE(arr.data[i], 8 * i);
  }
  return Buffer.concat([header, payload]);
}

export function writeBtsr(path: string, arr: BtsrArray): void {
  fs.writeFileSync(path, encodeBtsr(arr));
}

export function decodeBtsr(buf: Buffer): BtsrArray {
  if (buf.length < 10 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new Error("not a BTSR file (bad magic)");
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported BTSR version ${version}`);
  }
  const dtypeCode = buf.readUInt8(8);
  if (dtypeCode !== 1 && dtypeCode !== 2) {
    throw new Error(`unknown dtype code ${dtypeCode}`);
  }
  const dtype: Dtype = dtypeCode === 1 ? "f32" : "f64";
  const rank = buf.readUInt8(9);
  const shape: number[] = [];
  let offset = 10;
  for (let i = 0; i < rank; i++) {
    shape.push(Number(buf.readBigUInt64LE(offset)));
    offset += 8;
  }
  const n = elementCount(shape);
  const itemSize = dtype === "f32" ? 4 : 8;
  if (buf.length !== offset + n * itemSize) {
    throw new Error(
      `payload size ${buf.length - offset} does not match shape [${shape}]`
    );
  }
  const data = dtype === "f32" ? new Float32Array(n) : new Float64Array(n);
  if (dtype === "f32") {
    for (let i = 0; i < n; i++) data[i] = buf.readFloatLE(offset + 4 * i);
  } else {
    for (let i = 0; i < n; i++) data[i] = buf.readDoubleLE(offset + 8 * i);
  }
  return { dtype, shape, data };
}

export function readBtsr(path: string): BtsrArray {
  return decodeBtsr(fs.readFileSync(path));
}
