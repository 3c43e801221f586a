/**
 * Training loop: jointly fits the encoder, codebook and decoder on shifted
 * residual targets from the fixed gradient predictor, accumulates the
 * index-usage histogram over a final full pass, and exports the codec's
 * PILW model file together with optional reference planes for
 * cross-runtime conformance checks.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import { TrainConfig, validate } from "./config";
import { ImageSet, loadPpmDir, rng, syntheticImages } from "./data";
import { exportModel, modelBytes } from "./export";
import { nllBits, totalLoss, vqLoss } from "./losses";
import { Model } from "./model";
import { forwardResidual } from "./predictor";

export interface TrainResult {
  model: Model;
  losses: number[];
  histogram: Uint32Array;
  data: ImageSet;
}

function batchTensors(
  data: ImageSet,
  residuals: Uint8Array[],
  picks: number[],
): { images: tf.Tensor4D; targets: tf.Tensor4D } {
  const { h, w } = data;
  const n = picks.length;
  const img = new Float32Array(n * h * w * 3);
  const tgt = new Float32Array(n * h * w * 3);
  picks.forEach((p, i) => {
    img.set(Float32Array.from(data.images[p]), i * h * w * 3);
    tgt.set(Float32Array.from(residuals[p]), i * h * w * 3);
  });
  return {
    images: tf.tensor4d(img, [n, h, w, 3]),
    targets: tf.tensor4d(tgt, [n, h, w, 3]),
  };
}

export function train(cfg: TrainConfig): TrainResult {
  validate(cfg);
  const data = cfg.datasetPath
    ? loadPpmDir(cfg.datasetPath)
    : syntheticImages(cfg.datasetSize, cfg.imageSize, cfg.seed);
  const residuals = data.images.map((im) => forwardResidual(im, data.h, data.w));

  const model = new Model(
    { K: cfg.K, Dc: cfg.Dc, channels: cfg.channels, blocks: cfg.blocks },
    cfg.seed,
  );
  const opt = tf.train.adam(cfg.learningRate);
  const pick = rng(cfg.seed + 1);
  const losses: number[] = [];

  for (let step = 0; step < cfg.steps; step++) {
    const picks = Array.from({ length: cfg.batchSize }, () =>
      Math.floor(pick() * data.images.length),
    );
    const { images, targets } = batchTensors(data, residuals, picks);
    const cost = opt.minimize(
      () => {
        const { zHat, zQ, mu, s } = model.forward(images);
        return totalLoss(nllBits(targets, mu, s), vqLoss(zHat, zQ, cfg.beta), cfg.alpha);
      },
      true,
      model.trainable(),
    ) as tf.Scalar;
    const value = cost.dataSync()[0];
    cost.dispose();
    images.dispose();
    targets.dispose();
    if (!Number.isFinite(value)) {
      const dump = { step, losses, config: cfg };
      const dumpPath = `${cfg.exportPath}.divergence.json`;
      fs.writeFileSync(dumpPath, JSON.stringify(dump, null, 2));
      throw new Error(`training diverged at step ${step}; state in ${dumpPath}`);
    }
    losses.push(value);
  }

  const histogram = indexHistogram(model, data, cfg.batchSize);
  return { model, losses, histogram, data };
}

/** Index usage over one full pass of the dataset. */
export function indexHistogram(model: Model, data: ImageSet, batch: number): Uint32Array {
  const hist = new Uint32Array(model.cfg.K);
  for (let start = 0; start < data.images.length; start += batch) {
    const picks = [];
    for (let i = start; i < Math.min(start + batch, data.images.length); i++) picks.push(i);
    const img = new Float32Array(picks.length * data.h * data.w * 3);
    picks.forEach((p, i) => img.set(Float32Array.from(data.images[p]), i * data.h * data.w * 3));
    const t = tf.tensor4d(img, [picks.length, data.h, data.w, 3]);
    const idx = tf.tidy(() => model.quantize(model.encode(t)).indices);
    for (const v of idx.dataSync()) hist[v] += 1;
    idx.dispose();
    t.dispose();
  }
  return hist;
}

export interface ReferencePlane {
  shape: [number, number];
  indices: number[][];
  mu: number[][][];
  s: number[][][];
}

/** (indices -> mu, s) planes for cross-runtime conformance, odd and even
 * output shapes included. */
export function referencePlanes(model: Model, data: ImageSet, count = 10): ReferencePlane[] {
  const planes: ReferencePlane[] = [];
  for (let i = 0; i < count; i++) {
    const H = data.h - (i % 3);
    const W = data.w - ((i >> 1) % 3);
    const crop = new Float32Array(H * W * 3);
    const src = data.images[i % data.images.length];
    for (let u = 0; u < H; u++) {
      for (let v = 0; v < W; v++) {
        for (let c = 0; c < 3; c++) crop[(u * W + v) * 3 + c] = src[(u * data.w + v) * 3 + c];
      }
    }
    const img = tf.tensor4d(crop, [1, H, W, 3]);
    const out = tf.tidy(() => {
      const { indices } = model.quantize(model.encode(img));
      const { mu, s } = model.decodeIndices(indices, H, W);
      return {
        idx: indices.arraySync() as number[][][],
        mu: mu.arraySync() as number[][][][],
        s: s.arraySync() as number[][][][],
      };
    });
    img.dispose();
    planes.push({ shape: [H, W], indices: out.idx[0], mu: out.mu[0], s: out.s[0] });
  }
  return planes;
}

export function writeReference(dir: string, model: Model, histogram: Uint32Array, planes: ReferencePlane[]): void {
  fs.mkdirSync(dir, { recursive: true });
  fs.writeFileSync(path.join(dir, "model.pilw"), modelBytes(model, histogram));
  fs.writeFileSync(path.join(dir, "planes.json"), JSON.stringify(planes));
}

export function trainAndExport(cfg: TrainConfig): TrainResult {
  const result = train(cfg);
  exportModel(result.model, result.histogram, cfg.exportPath);
  if (cfg.referenceDir) {
    writeReference(cfg.referenceDir, result.model, result.histogram, referencePlanes(result.model, result.data));
  }
  return result;
}
