/** Command-line entry: train the density model and export a PILW file. */

import { DEFAULTS, TrainConfig } from "./config";
import { trainAndExport } from "./train";

function parseArgs(argv: string[]): TrainConfig {
  const cfg: TrainConfig = { ...DEFAULTS };
  const num: Record<string, keyof TrainConfig> = {
    "--alpha": "alpha",
    "--beta": "beta",
    "--lr": "learningRate",
    "--batch": "batchSize",
    "--steps": "steps",
    "--K": "K",
    "--Dc": "Dc",
    "--channels": "channels",
    "--blocks": "blocks",
    "--count": "datasetSize",
    "--size": "imageSize",
    "--seed": "seed",
  };
  for (let i = 2; i < argv.length; i += 2) {
    const key = argv[i];
    const val = argv[i + 1];
    if (val === undefined) throw new Error(`missing value for ${key}`);
    if (key in num) {
      (cfg as any)[num[key]] = Number(val);
    } else if (key === "--out") {
      cfg.exportPath = val;
    } else if (key === "--dataset") {
      cfg.datasetPath = val;
    } else if (key === "--ref-dir") {
      cfg.referenceDir = val;
    } else {
      throw new Error(`unknown flag ${key}`);
    }
  }
  return cfg;
}

function main(): void {
  const cfg = parseArgs(process.argv);
  const t0 = Date.now();
  const result = trainAndExport(cfg);
  const first = result.losses[0];
  const last = result.losses[result.losses.length - 1];
  console.log(
    `trained ${cfg.steps} steps in ${((Date.now() - t0) / 1000).toFixed(1)}s: ` +
      `loss ${first.toFixed(4)} -> ${last.toFixed(4)}`,
  );
  console.log(`model written to ${cfg.exportPath}`);
  if (cfg.referenceDir) console.log(`reference planes in ${cfg.referenceDir}`);
}

main();
