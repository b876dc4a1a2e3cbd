#!/usr/bin/env node
import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { parseArgs } from "node:util";

import * as tf from "@tensorflow/tfjs";

import { loadCorpus } from "./images.js";
import { saveFemb } from "./femb.js";
import { LabelRow, loadLabels, saveLabels } from "./labels.js";
import { trainMae } from "./mae.js";
import { ablationSpec, modelSlug, modelSpec, parseModelFamily } from "./models.js";
import { embedCorpus } from "./extract.js";
import { segmentDirectory } from "./unet.js";

const USAGE = `usage:
  extract segment   --images DIR --checkpoint FILE --out DIR [--seed N]
  extract embed     --images DIR --model FAMILY --out DIR
                    [--resolution N] [--segmented --masks DIR] [--labels CSV]
                    [--checkpoint FILE] [--batch N] [--seed N]
  extract train-mae --images DIR --out FILE
                    [--segmented --masks DIR] [--translate FRAC]
                    [--epochs N] [--batch N] [--lr F] [--mask-ratio F] [--seed N]

Models: ResNet18, ResNet50, CLIP-B/32, CLIP-L/14-336, DiT-Base, DiT-Large, MAE-448.
--segmented runs the images through the evaluation package's mask-apply tool
first, so training or extraction sees mask-applied inputs.`;

// Silence the engine's install-another-backend advisory; the pure-JS backend
// is deliberate, so the hint is noise on every run.
tf.env().set("PROD", true);

class CliError extends Error {}

function parseIntArg(text: string, flag: string): number {
  const value = Number(text);
  if (!Number.isInteger(value)) {
    throw new CliError(`${flag} expects an integer, got ${JSON.stringify(text)}`);
  }
  return value;
}

function parseFloatArg(text: string, flag: string): number {
  const value = Number(text);
  if (!Number.isFinite(value)) {
    throw new CliError(`${flag} expects a number, got ${JSON.stringify(text)}`);
  }
  return value;
}

/** Mask-apply a directory through the evaluation package's CLI. */
function applyMasks(imagesDir: string, masksDir: string): string {
  const outDir = fs.mkdtempSync(path.join(os.tmpdir(), "extract-masked-"));
  const result = spawnSync(
    "formbench",
    ["mask-apply", "--images", imagesDir, "--masks", masksDir, "--out", outDir],
    { encoding: "utf8" },
  );
  if (result.error !== undefined && (result.error as NodeJS.ErrnoException).code === "ENOENT") {
    throw new CliError(
      "--segmented needs the `formbench` command-line tool on PATH to apply masks",
    );
  }
  if (result.status !== 0) {
    const detail = (result.stderr || result.stdout || "").trim();
    throw new CliError(`mask application failed: ${detail}`);
  }
  return outDir;
}

function cmdSegment(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      images: { type: "string" },
      checkpoint: { type: "string" },
      out: { type: "string" },
      seed: { type: "string", default: "0" },
    },
  });
  if (!values.images || !values.checkpoint || !values.out) {
    throw new CliError("segment needs --images, --checkpoint and --out");
  }
  const result = segmentDirectory(
    values.images,
    values.checkpoint,
    values.out,
    parseIntArg(values.seed!, "--seed"),
  );
  console.log(`wrote ${result.stems.length} mask(s) to ${values.out}`);
}

function cmdEmbed(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      images: { type: "string" },
      model: { type: "string" },
      out: { type: "string" },
      resolution: { type: "string" },
      segmented: { type: "boolean", default: false },
      masks: { type: "string" },
      labels: { type: "string" },
      checkpoint: { type: "string" },
      batch: { type: "string", default: "8" },
      seed: { type: "string", default: "0" },
    },
  });
  if (!values.images || !values.model || !values.out) {
    throw new CliError("embed needs --images, --model and --out");
  }
  const family = parseModelFamily(values.model);
  const spec = modelSpec(
    family,
    values.resolution === undefined ? undefined : parseIntArg(values.resolution, "--resolution"),
  );
  let imagesDir = values.images;
  let cleanup: string | undefined;
  if (values.segmented) {
    if (!values.masks) {
      throw new CliError("--segmented needs --masks DIR");
    }
    imagesDir = applyMasks(values.images, values.masks);
    cleanup = imagesDir;
  }
  try {
    const corpus = loadCorpus(imagesDir, spec.inputResolution);
    const set = embedCorpus(corpus, spec, {
      seed: parseIntArg(values.seed!, "--seed"),
      batchSize: parseIntArg(values.batch!, "--batch"),
      checkpoint: values.checkpoint,
    });
    const variant = values.segmented ? "seg" : "noseg";
    const fembPath = path.join(values.out, `${modelSlug(family)}_${variant}.femb`);
    saveFemb(fembPath, set);
    console.log(`wrote ${set.ids.length}x${set.dim} embeddings to ${fembPath}`);
    if (values.labels) {
      const known = new Map(loadLabels(values.labels).map((row) => [row.id, row]));
      const rows: LabelRow[] = [];
      const missing: string[] = [];
      for (const id of set.ids) {
        const row = known.get(id);
        if (row === undefined) {
          missing.push(id);
        } else {
          rows.push(row);
        }
      }
      if (missing.length > 0) {
        throw new CliError(`labels file has no entry for: ${missing.join(", ")}`);
      }
      const labelsPath = path.join(values.out, "labels.csv");
      saveLabels(labelsPath, rows);
      console.log(`wrote ${rows.length} label row(s) to ${labelsPath}`);
    }
  } finally {
    if (cleanup !== undefined) {
      fs.rmSync(cleanup, { recursive: true, force: true });
    }
  }
}

function cmdTrainMae(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      images: { type: "string" },
      out: { type: "string" },
      segmented: { type: "boolean", default: false },
      masks: { type: "string" },
      translate: { type: "string", default: "0" },
      epochs: { type: "string", default: "20" },
      batch: { type: "string", default: "8" },
      lr: { type: "string", default: "1.5e-4" },
      "mask-ratio": { type: "string", default: "0.75" },
      seed: { type: "string", default: "0" },
    },
  });
  if (!values.images || !values.out) {
    throw new CliError("train-mae needs --images and --out");
  }
  const ablation = ablationSpec(parseFloatArg(values.translate!, "--translate"), values.segmented);
  let imagesDir = values.images;
  let cleanup: string | undefined;
  if (ablation.useSegmentedInputs) {
    if (!values.masks) {
      throw new CliError("--segmented needs --masks DIR");
    }
    imagesDir = applyMasks(values.images, values.masks);
    cleanup = imagesDir;
  }
  try {
    const corpus = loadCorpus(imagesDir, modelSpec("MAE-448").inputResolution);
    const result = trainMae(corpus, ablation, {
      seed: parseIntArg(values.seed!, "--seed"),
      epochs: parseIntArg(values.epochs!, "--epochs"),
      batchSize: parseIntArg(values.batch!, "--batch"),
      baseLr: parseFloatArg(values.lr!, "--lr"),
      maskRatio: parseFloatArg(values["mask-ratio"]!, "--mask-ratio"),
    });
    result.save(values.out);
    result.dispose();
    const first = result.epochLosses[0]!.toFixed(4);
    const last = result.epochLosses[result.epochLosses.length - 1]!.toFixed(4);
    console.log(
      `trained ${result.epochLosses.length} epoch(s), loss ${first} -> ${last}, checkpoint ${values.out}`,
    );
  } finally {
    if (cleanup !== undefined) {
      fs.rmSync(cleanup, { recursive: true, force: true });
    }
  }
}

export function main(argv: string[]): number {
  const [verb, ...rest] = argv;
  try {
    switch (verb) {
      case "segment":
        cmdSegment(rest);
        return 0;
      case "embed":
        cmdEmbed(rest);
        return 0;
      case "train-mae":
        cmdTrainMae(rest);
        return 0;
      case undefined:
      case "--help":
      case "-h":
        console.log(USAGE);
        return verb === undefined ? 2 : 0;
      default:
        throw new CliError(`unknown command ${JSON.stringify(verb)}`);
    }
  } catch (err) {
    if (err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url === new URL(`file://${path.resolve(entry)}`).href) {
  process.exit(main(process.argv.slice(2)));
}
