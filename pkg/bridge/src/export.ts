/**
 * Export a source latent plus per-step, per-conditioning velocity tensors
 * in the grid-provider manifest format.
 *
 * Velocities are recorded along the deterministic source-noising path
 * Z_t = (1-t) * source + t * noise on the uniform grid t_i = 1 - i/steps,
 * one tensor per (conditioning, step).  Replay therefore approximates a
 * live run rather than reproducing it: the live editing path depends on
 * downstream fusion decisions this exporter cannot see.
 */

import fs from "node:fs";
import path from "node:path";

import { parseNpy, serializeNpy, Tensor } from "./npy.js";
import { RectifiedFlowModel, tensorToFloat64 } from "./model.js";
import { Rng } from "./rng.js";

export class ExportError extends Error {}

export const CONDITIONINGS = ["src", "tar", "null"] as const;
export type Conditioning = (typeof CONDITIONINGS)[number];

export interface ExportOptions {
  steps: number;
  seed: number;
  outDir: string;
  /** NPY latent to edit; omitted -> a seeded standard-normal latent */
  sourcePath?: string;
  prompts: Record<Conditioning, string>;
}

export interface ExportManifest {
  conditionings: string[];
  steps: number;
  files: Record<string, string>;
  latent_shape: number[];
  prompts: Record<string, string>;
}

function sameShape(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((d, i) => d === b[i]);
}

function loadSource(model: RectifiedFlowModel, opts: ExportOptions): Float64Array {
  if (opts.sourcePath) {
    if (!fs.existsSync(opts.sourcePath)) {
      throw new ExportError(`source latent not found: ${opts.sourcePath}`);
    }
    const t = parseNpy(fs.readFileSync(opts.sourcePath));
    if (!sameShape(t.shape, model.latentShape)) {
      throw new ExportError(
        `source latent shape [${t.shape}] does not match model shape [${model.latentShape}]`,
      );
    }
    return tensorToFloat64(t);
  }
  const n = model.latentShape.reduce((a, b) => a * b, 1);
  const rng = new Rng(opts.seed);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = rng.normal();
  return out;
}

function toTensor(shape: number[], values: Float64Array): Tensor {
  const data = new Float32Array(values.length);
  for (let i = 0; i < values.length; i++) data[i] = Math.fround(values[i]);
  return { shape, data };
}

export function exportRun(model: RectifiedFlowModel, opts: ExportOptions): ExportManifest {
  if (!Number.isInteger(opts.steps) || opts.steps < 1) {
    throw new ExportError(`steps must be a positive integer, got ${opts.steps}`);
  }
  fs.mkdirSync(opts.outDir, { recursive: true });

  const shape = model.latentShape;
  const count = shape.reduce((a, b) => a * b, 1);
  const source = loadSource(model, opts);

  // one noise draw per export, reused at every timestep (seed offset keeps
  // it distinct from a synthesized source latent)
  const noiseRng = new Rng(BigInt(opts.seed) + 0x100000000n);
  const noise = new Float64Array(count);
  for (let i = 0; i < count; i++) noise[i] = noiseRng.normal();

  fs.writeFileSync(path.join(opts.outDir, "source_latent.npy"),
    serializeNpy(toTensor(shape, source)));

  const files: Record<string, string> = {};
  const z = new Float64Array(count);
  for (let i = 0; i < opts.steps; i++) {
    const t = 1 - i / opts.steps;
    for (let k = 0; k < count; k++) z[k] = (1 - t) * source[k] + t * noise[k];
    for (const cond of CONDITIONINGS) {
      const v = model.velocity(z, t, opts.prompts[cond]);
      if (v.length !== count) {
        throw new ExportError(
          `shape drift at step ${i} (${cond}): model returned ${v.length} values, expected ${count}`,
        );
      }
      const name = `${cond}_${String(i).padStart(3, "0")}.npy`;
      fs.writeFileSync(path.join(opts.outDir, name), serializeNpy(toTensor(shape, v)));
      files[`${cond}/${i}`] = name;
    }
  }

  const manifest: ExportManifest = {
    conditionings: [...CONDITIONINGS],
    steps: opts.steps,
    files,
    latent_shape: shape,
    prompts: { ...opts.prompts },
  };
  fs.writeFileSync(path.join(opts.outDir, "manifest.json"),
    JSON.stringify(manifest, null, 2) + "\n");
  return manifest;
}
