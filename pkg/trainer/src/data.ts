/**
 * Training data: deterministic synthetic images (smooth colour fields with
 * mild noise, so residuals have structure worth modelling), or a directory
 * of binary PPM files.
 */

import * as fs from "fs";
import * as path from "path";

export interface ImageSet {
  images: Uint8Array[]; // H*W*3 each
  h: number;
  w: number;
}

/** Deterministic 32-bit PRNG (mulberry32). */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function syntheticImages(count: number, size: number, seed: number): ImageSet {
  const rand = rng(seed);
  const images: Uint8Array[] = [];
  for (let n = 0; n < count; n++) {
    const img = new Uint8Array(size * size * 3);
    const waves = [];
    for (let k = 0; k < 3; k++) {
      waves.push({
        amp: 20 + 60 * rand(),
        fu: (rand() - 0.5) / 4,
        fv: (rand() - 0.5) / 4,
        phase: rand() * Math.PI * 2,
        tint: [rand(), rand(), rand()],
      });
    }
    const base = 60 + 140 * rand();
    for (let u = 0; u < size; u++) {
      for (let v = 0; v < size; v++) {
        for (let c = 0; c < 3; c++) {
          let val = base;
          for (const wv of waves) {
            val += wv.amp * wv.tint[c] * Math.sin(2 * Math.PI * (wv.fu * u + wv.fv * v) + wv.phase);
          }
          val += 4 * (rand() - 0.5);
          img[(u * size + v) * 3 + c] = Math.max(0, Math.min(255, Math.round(val)));
        }
      }
    }
    images.push(img);
  }
  return { images, h: size, w: size };
}

export function readPpm(file: string): { data: Uint8Array; h: number; w: number } {
  const raw = fs.readFileSync(file);
  if (raw.subarray(0, 2).toString() !== "P6") throw new Error(`${file}: not a P6 PPM`);
  const fields: number[] = [];
  let pos = 2;
  while (fields.length < 3) {
    while (pos < raw.length && /\s/.test(String.fromCharCode(raw[pos]))) pos++;
    if (raw[pos] === 0x23) {
      while (pos < raw.length && raw[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < raw.length && !/\s/.test(String.fromCharCode(raw[pos]))) pos++;
    fields.push(parseInt(raw.subarray(start, pos).toString(), 10));
  }
  pos++;
  const [w, h, maxval] = fields;
  if (maxval !== 255) throw new Error(`${file}: need maxval 255`);
  const need = w * h * 3;
  const data = new Uint8Array(raw.subarray(pos, pos + need));
  if (data.length !== need) throw new Error(`${file}: truncated payload`);
  return { data, h, w };
}

export function loadPpmDir(dir: string): ImageSet {
  const files = fs.readdirSync(dir).filter((f) => f.endsWith(".ppm")).sort();
  if (!files.length) throw new Error(`no .ppm files under ${dir}`);
  const first = readPpm(path.join(dir, files[0]));
  const images = [first.data];
  for (const f of files.slice(1)) {
    const im = readPpm(path.join(dir, f));
    if (im.h !== first.h || im.w !== first.w)
      throw new Error("training images must share one size");
    images.push(im.data);
  }
  return { images, h: first.h, w: first.w };
}

export function writePpm(file: string, data: Uint8Array, h: number, w: number): void {
  fs.writeFileSync(file, Buffer.concat([Buffer.from(`P6\n${w} ${h}\n255\n`), Buffer.from(data)]));
}
