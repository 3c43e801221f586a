/**
 * Fixed three-neighbour gradient predictor, mirroring the codec's
 * conventions exactly: float32 accumulation left to right with the bias
 * last, rounding half away from zero, reduction mod 256, and zero-valued
 * virtual context outside the image. The trainer keeps these 12 parameters
 * at their defaults and learns only the density model of the residual.
 */

const W: number[][] = [
  [-1, 1, 1], // red: upper-left, up, left
  [1, -1, 1], // green: g-left, r-left, r-here
  [1, -1, 1], // blue: b-left, g-left, g-here
];
const BIAS = [0, 0, 0];

function roundMod256(p: number): number {
  const r = p >= 0 ? Math.floor(p + 0.5) : Math.ceil(p - 0.5);
  const m = r % 256;
  return m < 0 ? m + 256 : m;
}

/** Shifted residual (x - prediction + 128) mod 256 for an HxWx3 image. */
export function forwardResidual(img: Uint8Array, h: number, w: number): Uint8Array {
  if (img.length !== h * w * 3) throw new Error("image buffer size mismatch");
  const out = new Uint8Array(img.length);
  const at = (u: number, v: number, c: number) =>
    u >= 0 && v >= 0 ? img[(u * w + v) * 3 + c] : 0;
  for (let u = 0; u < h; u++) {
    for (let v = 0; v < w; v++) {
      for (let c = 0; c < 3; c++) {
        let c0: number, c1: number, c2: number;
        if (c === 0) {
          c0 = at(u - 1, v - 1, 0);
          c1 = at(u - 1, v, 0);
          c2 = at(u, v - 1, 0);
        } else {
          c0 = at(u, v - 1, c);
          c1 = at(u, v - 1, c - 1);
          c2 = at(u, v, c - 1);
        }
        let acc = Math.fround(W[c][0] * c0);
        acc = Math.fround(acc + Math.fround(W[c][1] * c1));
        acc = Math.fround(acc + Math.fround(W[c][2] * c2));
        acc = Math.fround(acc + BIAS[c]);
        const pred = roundMod256(acc);
        out[(u * w + v) * 3 + c] = (img[(u * w + v) * 3 + c] - pred + 128) & 0xff;
      }
    }
  }
  return out;
}

/** 12 float32 LE values in codec order: (W_r, b_r, W_g, b_g, W_b, b_b). */
export function predictorParamBytes(): Buffer {
  const buf = Buffer.alloc(48);
  let off = 0;
  for (let c = 0; c < 3; c++) {
    for (let j = 0; j < 3; j++) {
      buf.writeFloatLE(W[c][j], off);
      off += 4;
    }
    buf.writeFloatLE(BIAS[c], off);
    off += 4;
  }
  return buf;
}
