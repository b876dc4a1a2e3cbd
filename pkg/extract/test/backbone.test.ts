import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { embedCorpus } from "../src/extract.js";
import { Corpus, loadCorpus } from "../src/images.js";
import { ModelFamily, modelSpec } from "../src/models.js";
import { writeSyntheticImages } from "./helpers.js";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "backbone-test-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

/** Small test resolutions that respect each family's patch size. */
const CASES: Array<{ family: ModelFamily; resolution: number }> = [
  { family: "ResNet18", resolution: 64 },
  { family: "ResNet50", resolution: 64 },
  { family: "CLIP-B/32", resolution: 64 },
  { family: "CLIP-L/14-336", resolution: 56 },
  { family: "DiT-Base", resolution: 64 },
  { family: "DiT-Large", resolution: 64 },
];

const corpora = new Map<number, Corpus>();

beforeAll(() => {
  const dir = path.join(tmp, "images");
  writeSyntheticImages(dir, 5, 64, 1);
  for (const resolution of new Set(CASES.map((c) => c.resolution))) {
    corpora.set(resolution, loadCorpus(dir, resolution));
  }
});

describe.each(CASES)("$family", ({ family, resolution }) => {
  it("embeds at exactly the family's documented width", () => {
    const spec = modelSpec(family, resolution);
    const set = embedCorpus(corpora.get(resolution)!, spec, { seed: 5 });
    expect(set.dim).toBe(spec.embeddingDim);
    expect(set.ids.length).toBe(5);
    expect(set.matrix.length).toBe(5 * spec.embeddingDim);
    for (const value of set.matrix) {
      expect(Number.isFinite(value)).toBe(true);
    }
  });

  it("is deterministic in eval mode: two passes give identical bytes", () => {
    const spec = modelSpec(family, resolution);
    const first = embedCorpus(corpora.get(resolution)!, spec, { seed: 5 });
    const second = embedCorpus(corpora.get(resolution)!, spec, { seed: 5 });
    expect(
      Buffer.compare(Buffer.from(first.matrix.buffer), Buffer.from(second.matrix.buffer)),
    ).toBe(0);
  });
});

describe("embedding behavior", () => {
  it("different seeds give different embeddings", () => {
    const spec = modelSpec("CLIP-B/32", 64);
    const a = embedCorpus(corpora.get(64)!, spec, { seed: 1 });
    const b = embedCorpus(corpora.get(64)!, spec, { seed: 2 });
    expect([...a.matrix]).not.toEqual([...b.matrix]);
  });

  it("different images embed to different rows", () => {
    const spec = modelSpec("DiT-Base", 64);
    const set = embedCorpus(corpora.get(64)!, spec, { seed: 1 });
    const row0 = [...set.matrix.slice(0, set.dim)];
    const row1 = [...set.matrix.slice(set.dim, 2 * set.dim)];
    expect(row0).not.toEqual(row1);
  });

  it("batch size does not change the result", () => {
    const spec = modelSpec("ResNet18", 64);
    const whole = embedCorpus(corpora.get(64)!, spec, { seed: 3, batchSize: 8 });
    const split = embedCorpus(corpora.get(64)!, spec, { seed: 3, batchSize: 2 });
    expect(
      Buffer.compare(Buffer.from(whole.matrix.buffer), Buffer.from(split.matrix.buffer)),
    ).toBe(0);
  });

  it("rejects a corpus prepared at the wrong resolution", () => {
    const spec = modelSpec("ResNet18", 224);
    expect(() => embedCorpus(corpora.get(64)!, spec, {})).toThrow(/expects 224px/);
  });
});
