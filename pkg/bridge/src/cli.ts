import { parseArgs } from "node:util";

import { ModelUnavailableError, resolveModel } from "./model.js";
import { ExportError, exportRun } from "./export.js";

const USAGE = `Usage: node dist/cli.js export --model <id> --out <dir> [options]

Runs a rectified-flow model and dumps the source latent plus per-step,
per-conditioning velocity tensors as a grid-provider manifest.

Options:
  --model <id>        gaussian:<params.json> (synthetic local backend)
  --out <dir>         output directory (manifest.json + NPY files)
  --steps <n>         uniform timesteps to record (default 28)
  --seed <n>          RNG seed for noise / synthesized latents (default 0)
  --source <npy>      source latent; omitted -> seeded standard normal
  --src-prompt <s>    source prompt (default "source scene")
  --tar-prompt <s>    target prompt (default "edited scene")
`;

function main(): number {
  const { values, positionals } = parseArgs({
    allowPositionals: true,
    options: {
      model: { type: "string" },
      out: { type: "string" },
      steps: { type: "string" },
      seed: { type: "string" },
      source: { type: "string" },
      "src-prompt": { type: "string" },
      "tar-prompt": { type: "string" },
      help: { type: "boolean", short: "h" },
    },
  });

  if (values.help || positionals[0] !== "export") {
    console.error(USAGE);
    return positionals[0] === undefined || values.help ? 0 : 2;
  }
  if (!values.model || !values.out) {
    console.error("error: --model and --out are required\n");
    console.error(USAGE);
    return 2;
  }

  try {
    const model = resolveModel(values.model);
    const manifest = exportRun(model, {
      steps: Number.parseInt(values.steps ?? "28", 10),
      seed: Number.parseInt(values.seed ?? "0", 10),
      outDir: values.out,
      sourcePath: values.source,
      prompts: {
        src: values["src-prompt"] ?? "source scene",
        tar: values["tar-prompt"] ?? "edited scene",
        null: "",
      },
    });
    const n = Object.keys(manifest.files).length;
    console.log(`wrote ${n} velocity tensors + source latent to ${values.out}`);
    return 0;
  } catch (err) {
    if (err instanceof ModelUnavailableError) {
      console.error(`model unavailable: ${err.message}`);
      return 2;
    }
    if (err instanceof ExportError) {
      console.error(`export failed: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

process.exit(main());
