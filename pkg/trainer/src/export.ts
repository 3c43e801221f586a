/**
 * PILW model-file writer (and a reader used by the tests).
 *
 * Layout, little-endian: magic "PILW" | version u8 | K, Dc, channels,
 * blocks u32 | tensor count u32 | per tensor: name length u32, name, rank
 * u32, dims u32 each, float32 payload | histogram K x u64 | 12 float32
 * predictor parameters | first 8 bytes of SHA-256 over everything above.
 *
 * Tensors appear in the codec's canonical order with conv kernels
 * transposed from tf's [kh, kw, in, out] to [out, in, kh, kw].
 */

import * as crypto from "crypto";
import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

import { ArchConfig, Model, convNames, convSpec } from "./model";
import { predictorParamBytes } from "./predictor";

export const MAGIC = "PILW";
export const VERSION = 1;

export interface FileTensor {
  name: string;
  dims: number[];
  data: Float32Array;
}

/** File order: encoder convs, codebook, decoder convs; each conv w then b. */
export function fileTensorOrder(cfg: ArchConfig): { name: string; dims: number[] }[] {
  const out: { name: string; dims: number[] }[] = [];
  for (const name of convNames(cfg)) {
    if (name === "dec.proj") {
      out.push({ name: "codebook", dims: [cfg.K, cfg.Dc] });
    }
    const [cout, cin, k] = convSpec(cfg, name);
    out.push({ name: `${name}.w`, dims: [cout, cin, k, k] });
    out.push({ name: `${name}.b`, dims: [cout] });
  }
  return out;
}

function tensorPayload(model: Model, name: string): Float32Array {
  const v = model.vars.get(name.endsWith(".w") || name.endsWith(".b") ? name : name)!;
  if (name === "codebook" || name.endsWith(".b")) {
    return v.dataSync() as Float32Array;
  }
  // conv kernel: [kh, kw, in, out] -> [out, in, kh, kw]
  return tf.tidy(() => tf.transpose(v, [3, 2, 0, 1]).dataSync() as Float32Array);
}

export function modelBytes(model: Model, histogram: number[] | Uint32Array): Buffer {
  const cfg = model.cfg;
  const chunks: Buffer[] = [];
  chunks.push(Buffer.from(MAGIC));
  chunks.push(Buffer.from([VERSION]));
  const head = Buffer.alloc(20);
  head.writeUInt32LE(cfg.K, 0);
  head.writeUInt32LE(cfg.Dc, 4);
  head.writeUInt32LE(cfg.channels, 8);
  head.writeUInt32LE(cfg.blocks, 12);
  const order = fileTensorOrder(cfg);
  head.writeUInt32LE(order.length, 16);
  chunks.push(head);
  for (const { name, dims } of order) {
    const nameBuf = Buffer.from(name, "utf8");
    const meta = Buffer.alloc(8 + 4 * dims.length);
    meta.writeUInt32LE(nameBuf.length, 0);
    let off = 4;
    meta.writeUInt32LE(dims.length, off);
    off += 4;
    for (const d of dims) {
      meta.writeUInt32LE(d, off);
      off += 4;
    }
    const payload = tensorPayload(model, name);
    const expect = dims.reduce((a, b) => a * b, 1);
    if (payload.length !== expect) {
      throw new Error(`${name}: payload ${payload.length}, expected ${expect}`);
    }
    chunks.push(Buffer.concat([meta.subarray(0, 4), nameBuf, meta.subarray(4)]));
    chunks.push(Buffer.from(payload.buffer.slice(payload.byteOffset, payload.byteOffset + payload.byteLength)));
  }
  const hist = Buffer.alloc(8 * cfg.K);
  for (let i = 0; i < cfg.K; i++) hist.writeBigUInt64LE(BigInt(histogram[i] ?? 0), 8 * i);
  chunks.push(hist);
  chunks.push(predictorParamBytes());
  const body = Buffer.concat(chunks);
  const digest = crypto.createHash("sha256").update(body).digest().subarray(0, 8);
  return Buffer.concat([body, digest]);
}

export function exportModel(model: Model, histogram: number[] | Uint32Array, path: string): Buffer {
  const bytes = modelBytes(model, histogram);
  const tmp = `${path}.tmp-${process.pid}`;
  fs.writeFileSync(tmp, bytes);
  fs.renameSync(tmp, path);
  return bytes;
}

export interface ParsedModel {
  cfg: ArchConfig;
  tensors: Map<string, FileTensor>;
  histogram: bigint[];
  digest: Buffer;
}

export function parseModel(data: Buffer): ParsedModel {
  if (data.subarray(0, 4).toString() !== MAGIC) throw new Error("bad magic");
  if (data[4] !== VERSION) throw new Error("bad version");
  const digest = crypto.createHash("sha256").update(data.subarray(0, -8)).digest().subarray(0, 8);
  if (!digest.equals(data.subarray(-8))) throw new Error("digest mismatch");
  const cfg: ArchConfig = {
    K: data.readUInt32LE(5),
    Dc: data.readUInt32LE(9),
    channels: data.readUInt32LE(13),
    blocks: data.readUInt32LE(17),
  };
  let off = 21;
  const count = data.readUInt32LE(off);
  off += 4;
  const tensors = new Map<string, FileTensor>();
  for (let i = 0; i < count; i++) {
    const nameLen = data.readUInt32LE(off);
    off += 4;
    const name = data.subarray(off, off + nameLen).toString("utf8");
    off += nameLen;
    const rank = data.readUInt32LE(off);
    off += 4;
    const dims: number[] = [];
    for (let r = 0; r < rank; r++) {
      dims.push(data.readUInt32LE(off));
      off += 4;
    }
    const n = dims.reduce((a, b) => a * b, 1);
    const payload = new Float32Array(n);
    for (let j = 0; j < n; j++) payload[j] = data.readFloatLE(off + 4 * j);
    off += 4 * n;
    tensors.set(name, { name, dims, data: payload });
  }
  const histogram: bigint[] = [];
  for (let i = 0; i < cfg.K; i++) {
    histogram.push(data.readBigUInt64LE(off));
    off += 8;
  }
  return { cfg, tensors, histogram, digest: Buffer.from(digest) };
}

/** Rebuild a runtime model from a parsed file (kernels transposed back). */
export function modelFromParsed(parsed: ParsedModel, seed = 0): Model {
  const model = new Model(parsed.cfg, seed);
  tf.tidy(() => {
    for (const name of model.vars.keys()) {
      const t = parsed.tensors.get(name);
      if (!t) throw new Error(`missing tensor ${name}`);
      if (name === "codebook" || name.endsWith(".b")) {
        model.vars.get(name)!.assign(tf.tensor(t.data, t.dims as [number, number]));
      } else {
        const [cout, cin, kh, kw] = t.dims;
        model.vars.get(name)!.assign(
          tf.transpose(tf.tensor(t.data, [cout, cin, kh, kw]), [2, 3, 1, 0]),
        );
      }
    }
  });
  return model;
}
