import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ExportError, exportRun, CONDITIONINGS } from "../src/export.js";
import { GaussianPointMassModel, ModelUnavailableError, resolveModel } from "../src/model.js";
import { parseNpy, serializeNpy, tensorFrom } from "../src/npy.js";

const SHAPE = [2, 8, 8];
const PROMPTS = { src: "a cat on a bench", tar: "a dog on a bench", null: "" };

let workDir: string;

beforeEach(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-test-"));
});

afterEach(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

function writeParams(shape = SHAPE): string {
  const p = path.join(workDir, "params.json");
  fs.writeFileSync(p, JSON.stringify({ shape }));
  return p;
}

function model(shape = SHAPE): GaussianPointMassModel {
  return new GaussianPointMassModel("gaussian:test", { shape });
}

describe("model resolution", () => {
  it("builds the synthetic backend from params", () => {
    const m = resolveModel(`gaussian:${writeParams()}`);
    expect(m.latentShape).toEqual(SHAPE);
  });

  it("gives a clear diagnostic for unavailable models", () => {
    expect(() => resolveModel("flux-dev")).toThrow(ModelUnavailableError);
    expect(() => resolveModel("flux-dev")).toThrow(/not available locally/);
  });

  it("rejects missing params files", () => {
    expect(() => resolveModel("gaussian:/no/such/params.json")).toThrow(/not found/);
  });

  it("identical prompts produce identical velocities", () => {
    const m = model();
    const z = new Float64Array(2 * 8 * 8).fill(0.5);
    const a = m.velocity(z, 0.7, "same words");
    const b = m.velocity(z, 0.7, "same words");
    expect(Array.from(a)).toEqual(Array.from(b));
    const c = m.velocity(z, 0.7, "different words");
    expect(Array.from(a)).not.toEqual(Array.from(c));
  });
});

describe("exportRun", () => {
  it("writes a complete manifest with every conditioning and step", () => {
    const steps = 4;
    const manifest = exportRun(model(), {
      steps, seed: 1, outDir: workDir, prompts: PROMPTS,
    });
    expect(manifest.conditionings).toEqual([...CONDITIONINGS]);
    expect(manifest.steps).toBe(steps);
    expect(manifest.latent_shape).toEqual(SHAPE);
    expect(Object.keys(manifest.files)).toHaveLength(3 * steps);
    for (const cond of CONDITIONINGS) {
      for (let i = 0; i < steps; i++) {
        const rel = manifest.files[`${cond}/${i}`];
        expect(rel).toBeDefined();
        const t = parseNpy(fs.readFileSync(path.join(workDir, rel)));
        expect(t.shape).toEqual(SHAPE);
      }
    }
    expect(fs.existsSync(path.join(workDir, "source_latent.npy"))).toBe(true);
    const onDisk = JSON.parse(fs.readFileSync(path.join(workDir, "manifest.json"), "utf-8"));
    expect(onDisk).toEqual(manifest);
  });

  it("re-exports byte-identically for the same seed", () => {
    const dirA = path.join(workDir, "a");
    const dirB = path.join(workDir, "b");
    for (const dir of [dirA, dirB]) {
      exportRun(model(), { steps: 3, seed: 99, outDir: dir, prompts: PROMPTS });
    }
    for (const name of fs.readdirSync(dirA)) {
      const a = fs.readFileSync(path.join(dirA, name));
      const b = fs.readFileSync(path.join(dirB, name));
      expect(a.equals(b), name).toBe(true);
    }
  });

  it("different seeds change the recorded tensors", () => {
    const dirA = path.join(workDir, "a");
    const dirB = path.join(workDir, "b");
    exportRun(model(), { steps: 2, seed: 1, outDir: dirA, prompts: PROMPTS });
    exportRun(model(), { steps: 2, seed: 2, outDir: dirB, prompts: PROMPTS });
    const a = fs.readFileSync(path.join(dirA, "src_000.npy"));
    const b = fs.readFileSync(path.join(dirB, "src_000.npy"));
    expect(a.equals(b)).toBe(false);
  });

  it("uses a provided source latent and validates its shape", () => {
    const srcPath = path.join(workDir, "src.npy");
    const t = tensorFrom(SHAPE, (i) => i / 100);
    fs.writeFileSync(srcPath, serializeNpy(t));
    const out = path.join(workDir, "out");
    exportRun(model(), {
      steps: 2, seed: 0, outDir: out, sourcePath: srcPath, prompts: PROMPTS,
    });
    const stored = parseNpy(fs.readFileSync(path.join(out, "source_latent.npy")));
    expect(Array.from(stored.data)).toEqual(Array.from(t.data));

    const badPath = path.join(workDir, "bad.npy");
    fs.writeFileSync(badPath, serializeNpy(tensorFrom([1, 4, 4], () => 0)));
    expect(() => exportRun(model(), {
      steps: 2, seed: 0, outDir: out, sourcePath: badPath, prompts: PROMPTS,
    })).toThrow(/shape/);
  });

  it("reports shape drift with the failing step", () => {
    const drifting = model();
    const original = drifting.velocity.bind(drifting);
    let calls = 0;
    drifting.velocity = (z, t, prompt) => {
      calls += 1;
      if (calls > 4) return new Float64Array(7); // drift partway through
      return original(z, t, prompt);
    };
    expect(() => exportRun(drifting, {
      steps: 3, seed: 0, outDir: workDir, prompts: PROMPTS,
    })).toThrow(ExportError);
  });

  it("rejects non-positive step counts", () => {
    expect(() => exportRun(model(), {
      steps: 0, seed: 0, outDir: workDir, prompts: PROMPTS,
    })).toThrow(/steps/);
  });
});
