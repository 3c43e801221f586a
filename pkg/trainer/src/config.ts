export interface TrainConfig {
  /** weight of the vector-quantization term in the total loss */
  alpha: number;
  /** commitment weight inside the vq loss */
  beta: number;
  learningRate: number;
  batchSize: number;
  steps: number;
  /** codebook entries (index symbols must fit one byte) */
  K: number;
  /** codebook dimension */
  Dc: number;
  /** conv channels */
  channels: number;
  /** residual blocks per side */
  blocks: number;
  /** synthetic dataset: number of images and square size */
  datasetSize: number;
  imageSize: number;
  /** directory of .ppm training images; synthetic data when absent */
  datasetPath?: string;
  seed: number;
  exportPath: string;
  /** when set, reference planes + a model copy are written here */
  referenceDir?: string;
}

export const DEFAULTS: TrainConfig = {
  alpha: 125,
  beta: 0.25,
  learningRate: 1e-3,
  batchSize: 8,
  steps: 200,
  K: 256,
  Dc: 32,
  channels: 32,
  blocks: 4,
  datasetSize: 1000,
  imageSize: 32,
  seed: 0,
  exportPath: "model.pilw",
};

export function validate(cfg: TrainConfig): void {
  if (!(cfg.alpha > 0)) throw new Error("alpha must be positive");
  if (!(cfg.beta > 0)) throw new Error("beta must be positive");
  if (!(cfg.K >= 1 && cfg.K <= 256)) throw new Error("K must be in [1, 256]");
  if (cfg.Dc < 1 || cfg.channels < 1 || cfg.blocks < 1)
    throw new Error("architecture sizes must be positive");
  if (cfg.steps < 1 || cfg.batchSize < 1) throw new Error("bad schedule");
}
