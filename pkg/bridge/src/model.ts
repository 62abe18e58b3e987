/**
 * Rectified-flow model backends.
 *
 * The bridge can run any backend implementing RectifiedFlowModel.  The only
 * one available offline is the seeded synthetic point-mass model: each
 * prompt hashes to a smooth per-conditioning mean field mu, and the
 * velocity along the linear noising path is (z - mu) / max(t, eps).
 * Checkpoint-backed models (FLUX-style ids) are deliberately not bundled;
 * asking for one produces a clear diagnostic instead of a silent fallback.
 */

import fs from "node:fs";

import { Rng, fnv1a } from "./rng.js";
import { Tensor } from "./npy.js";

export class ModelUnavailableError extends Error {}

export interface RectifiedFlowModel {
  readonly id: string;
  readonly latentShape: number[];
  /** velocity at latent z, timestep t in [0,1], for a prompt string */
  velocity(z: Float64Array, t: number, prompt: string): Float64Array;
}

interface GaussianParams {
  shape: number[];
  epsilon?: number;
  smoothing?: number;
}

function boxBlur(field: Float64Array, c: number, h: number, w: number): Float64Array {
  const out = new Float64Array(field.length);
  for (let ch = 0; ch < c; ch++) {
    for (let i = 0; i < h; i++) {
      for (let j = 0; j < w; j++) {
        let acc = 0;
        let n = 0;
        for (let di = -1; di <= 1; di++) {
          for (let dj = -1; dj <= 1; dj++) {
            const ii = i + di;
            const jj = j + dj;
            if (ii >= 0 && ii < h && jj >= 0 && jj < w) {
              acc += field[(ch * h + ii) * w + jj];
              n += 1;
            }
          }
        }
        out[(ch * h + i) * w + j] = acc / n;
      }
    }
  }
  return out;
}

export class GaussianPointMassModel implements RectifiedFlowModel {
  readonly id: string;
  readonly latentShape: number[];
  private readonly epsilon: number;
  private readonly smoothing: number;
  private readonly means = new Map<string, Float64Array<ArrayBufferLike>>();

  constructor(id: string, params: GaussianParams) {
    if (!params.shape || params.shape.length !== 3 || params.shape.some((d) => d < 1)) {
      throw new ModelUnavailableError(
        `model params need "shape": [channels, height, width], got ${JSON.stringify(params.shape)}`,
      );
    }
    this.id = id;
    this.latentShape = params.shape.map((d) => Math.trunc(d));
    this.epsilon = params.epsilon ?? 1e-4;
    this.smoothing = params.smoothing ?? 2;
  }

  private meanFor(prompt: string): Float64Array {
    const cached = this.means.get(prompt);
    if (cached) return cached;
    const [c, h, w] = this.latentShape;
    const rng = new Rng(fnv1a(prompt));
    let field: Float64Array = new Float64Array(c * h * w);
    for (let i = 0; i < field.length; i++) field[i] = rng.normal();
    for (let pass = 0; pass < this.smoothing; pass++) field = boxBlur(field, c, h, w);
    this.means.set(prompt, field);
    return field;
  }

  velocity(z: Float64Array, t: number, prompt: string): Float64Array {
    const mu = this.meanFor(prompt);
    if (z.length !== mu.length) {
      throw new Error(`latent holds ${z.length} values, model expects ${mu.length}`);
    }
    const denom = Math.max(t, this.epsilon);
    const out = new Float64Array(z.length);
    for (let i = 0; i < z.length; i++) out[i] = (z[i] - mu[i]) / denom;
    return out;
  }
}

export function resolveModel(modelId: string): RectifiedFlowModel {
  if (modelId.startsWith("gaussian:")) {
    const path = modelId.slice("gaussian:".length);
    if (!fs.existsSync(path)) {
      throw new ModelUnavailableError(`model params file not found: ${path}`);
    }
    const params = JSON.parse(fs.readFileSync(path, "utf-8")) as GaussianParams;
    return new GaussianPointMassModel(modelId, params);
  }
  throw new ModelUnavailableError(
    `model "${modelId}" is not available locally. This environment ships no ` +
    `checkpoint-backed rectified-flow backends; use "gaussian:<params.json>" ` +
    `(synthetic point-mass model) or run the export on a machine with the ` +
    `target model installed.`,
  );
}

export function tensorToFloat64(t: Tensor): Float64Array {
  const out = new Float64Array(t.data.length);
  for (let i = 0; i < t.data.length; i++) out[i] = t.data[i];
  return out;
}
