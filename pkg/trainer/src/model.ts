/**
 * Residual-density network: encoder -> codebook quantization -> decoder
 * producing per-pixel logistic (mu, s). Mirrors the codec's inference graph:
 * edge-replicate padded 3x3 convolutions, one stride-2 stage, residual
 * blocks, pixel-shuffle upsampling with channel order c*r*r + dy*r + dx,
 * mu = 255*sigmoid(clip(a, +/-15)), s = exp(clip(b, log 0.5, log 64)).
 *
 * Variables are kept in tf's conv layout [kh, kw, in, out]; the exporter
 * transposes to the codec's [out, in, kh, kw].
 */

import * as tf from "@tensorflow/tfjs";

export interface ArchConfig {
  K: number;
  Dc: number;
  channels: number;
  blocks: number;
}

export const MU_LOGIT_LIMIT = 15;
export const LOG_S_MIN = Math.fround(Math.log(0.5));
export const LOG_S_MAX = Math.fround(Math.log(64));

export function stopGradient(x: tf.Tensor): tf.Tensor {
  const f = tf.customGrad((...args) => {
    const a = args[0] as tf.Tensor;
    return {
      value: a.clone(),
      gradFunc: (dy: tf.Tensor) => [tf.zerosLike(dy)],
    };
  });
  return f(x);
}

/** Conv tensor names in the codec's canonical order. */
export function convNames(cfg: ArchConfig): string[] {
  const names = ["enc.stem", "enc.down"];
  for (let i = 0; i < cfg.blocks; i++) names.push(`enc.block${i}.conv1`, `enc.block${i}.conv2`);
  names.push("enc.proj");
  names.push("dec.proj");
  for (let i = 0; i < cfg.blocks; i++) names.push(`dec.block${i}.conv1`, `dec.block${i}.conv2`);
  names.push("dec.up", "dec.mu", "dec.s");
  return names;
}

/** [out, in, k] per conv, matching the codec's expected shapes. */
export function convSpec(cfg: ArchConfig, name: string): [number, number, number] {
  const C = cfg.channels;
  switch (name) {
    case "enc.stem": return [C, 3, 3];
    case "enc.down": return [C, C, 3];
    case "enc.proj": return [cfg.Dc, C, 1];
    case "dec.proj": return [C, cfg.Dc, 1];
    case "dec.up": return [4 * C, C, 3];
    case "dec.mu": return [3, C, 3];
    case "dec.s": return [3, C, 3];
    default: return [C, C, 3]; // residual block convs
  }
}

let instanceCounter = 0;

export class Model {
  readonly cfg: ArchConfig;
  readonly vars = new Map<string, tf.Variable>();

  constructor(cfg: ArchConfig, seed = 0) {
    this.cfg = cfg;
    // tf variable names are engine-global; prefix them per instance
    const prefix = `m${instanceCounter++}`;
    let i = 0;
    for (const name of convNames(cfg)) {
      const [cout, cin, k] = convSpec(cfg, name);
      const std = Math.sqrt(2 / (cin * k * k));
      this.vars.set(
        `${name}.w`,
        tf.variable(
          tf.randomNormal([k, k, cin, cout], 0, std, "float32", seed + i++),
          true, `${prefix}/${name}.w`,
        ),
      );
      this.vars.set(`${name}.b`, tf.variable(tf.zeros([cout]), true, `${prefix}/${name}.b`));
    }
    this.vars.set(
      "codebook",
      tf.variable(
        tf.randomNormal([cfg.K, cfg.Dc], 0, 1, "float32", seed + i++),
        true, `${prefix}/codebook`,
      ),
    );
  }

  trainable(): tf.Variable[] {
    return [...this.vars.values()];
  }

  dispose(): void {
    for (const v of this.vars.values()) v.dispose();
  }

  private conv(x: tf.Tensor4D, name: string, stride: 1 | 2 = 1): tf.Tensor4D {
    const w = this.vars.get(`${name}.w`)! as unknown as tf.Tensor4D;
    const b = this.vars.get(`${name}.b`)!;
    const k = w.shape[0];
    let padded = x;
    if (k === 3) {
      padded = tf.mirrorPad(x, [[0, 0], [1, 1], [1, 1], [0, 0]], "symmetric");
    }
    return tf.add(tf.conv2d(padded, w, stride, "valid"), b);
  }

  private resBlock(x: tf.Tensor4D, name: string): tf.Tensor4D {
    const h = tf.relu(this.conv(x, `${name}.conv1`)) as tf.Tensor4D;
    return tf.relu(tf.add(x, this.conv(h, `${name}.conv2`))) as tf.Tensor4D;
  }

  /** (B, H, W, 3) uint8-valued floats -> latent (B, ceil(H/2), ceil(W/2), Dc). */
  encode(images: tf.Tensor4D): tf.Tensor4D {
    return tf.tidy(() => {
      let x = tf.sub(tf.div(images, 127.5), 1) as tf.Tensor4D;
      const [, H, W] = x.shape;
      if (H % 2 || W % 2) {
        x = tf.mirrorPad(x, [[0, 0], [0, H % 2], [0, W % 2], [0, 0]], "symmetric");
      }
      let h = tf.relu(this.conv(x, "enc.stem")) as tf.Tensor4D;
      h = tf.relu(this.conv(h, "enc.down", 2)) as tf.Tensor4D;
      for (let i = 0; i < this.cfg.blocks; i++) h = this.resBlock(h, `enc.block${i}`);
      return this.conv(h, "enc.proj");
    });
  }

  /** Nearest-codebook assignment; returns indices plus the quantized and
   * straight-through latents. Indices are detached from the tape (argMin is
   * non-differentiable; gradients reach the codebook through the gather). */
  quantize(zHat: tf.Tensor4D): { indices: tf.Tensor3D; zQ: tf.Tensor4D; zSt: tf.Tensor4D } {
    const cb = this.vars.get("codebook")!;
    const [B, h, w, Dc] = zHat.shape;
    const flatIdx = tf.tidy(() => {
      const flat = zHat.reshape([B * h * w, Dc]);
      const d = tf.add(
        tf.sum(tf.square(flat), 1, true),
        tf.sub(tf.sum(tf.square(cb), 1).reshape([1, this.cfg.K]),
               tf.mul(2, tf.matMul(flat, cb as unknown as tf.Tensor2D, false, true))),
      );
      return tf.argMin(d, 1).dataSync() as Int32Array;
    });
    return tf.tidy(() => {
      const indices = tf.tensor1d(flatIdx, "int32");
      const zQ = tf.gather(cb, indices).reshape([B, h, w, Dc]) as tf.Tensor4D;
      const zSt = tf.add(zHat, stopGradient(tf.sub(zQ, zHat))) as tf.Tensor4D;
      return { indices: indices.reshape([B, h, w]) as tf.Tensor3D, zQ, zSt };
    });
  }

  /** Latent -> (mu, s) planes cropped to (B, H, W, 3). */
  decode(z: tf.Tensor4D, outH: number, outW: number): { mu: tf.Tensor4D; s: tf.Tensor4D } {
    return tf.tidy(() => {
      let h = tf.relu(this.conv(z, "dec.proj")) as tf.Tensor4D;
      for (let i = 0; i < this.cfg.blocks; i++) h = this.resBlock(h, `dec.block${i}`);
      let u = this.conv(h, "dec.up");
      u = tf.relu(pixelShuffle(u)) as tf.Tensor4D;
      const a = tf.clipByValue(this.conv(u, "dec.mu"), -MU_LOGIT_LIMIT, MU_LOGIT_LIMIT);
      const mu = tf.mul(255, tf.sigmoid(a)).slice([0, 0, 0, 0], [-1, outH, outW, -1]);
      const sRaw = tf.exp(tf.clipByValue(this.conv(u, "dec.s"), LOG_S_MIN, LOG_S_MAX));
      const s = tf.clipByValue(sRaw, 0.5, 64).slice([0, 0, 0, 0], [-1, outH, outW, -1]);
      return { mu: mu as tf.Tensor4D, s: s as tf.Tensor4D };
    });
  }

  /** Inference path used for reference planes: indices -> (mu, s). */
  decodeIndices(indices: tf.Tensor3D, outH: number, outW: number) {
    return tf.tidy(() => {
      const cb = this.vars.get("codebook")!;
      const [B, gh, gw] = indices.shape;
      const zQ = tf.gather(cb, indices.reshape([B * gh * gw]))
        .reshape([B, gh, gw, this.cfg.Dc]) as tf.Tensor4D;
      return this.decode(zQ, outH, outW);
    });
  }

  /** Full training-path forward pass. */
  forward(images: tf.Tensor4D) {
    const [, H, W] = images.shape;
    const zHat = this.encode(images);
    const { indices, zQ, zSt } = this.quantize(zHat);
    const { mu, s } = this.decode(zSt, H, W);
    return { zHat, indices, zQ, mu, s };
  }
}

/** (B, h, w, C*4) -> (B, 2h, 2w, C); channel c*4 + dy*2 + dx lands at
 * spatial offset (dy, dx), matching the codec's shuffle order. */
export function pixelShuffle(x: tf.Tensor4D): tf.Tensor4D {
  return tf.tidy(() => {
    const [B, h, w, crr] = x.shape;
    const C = crr / 4;
    return x
      .reshape([B, h, w, C, 2, 2])
      .transpose([0, 1, 4, 2, 5, 3])
      .reshape([B, 2 * h, 2 * w, C]) as tf.Tensor4D;
  });
}
