import { buildEmbedder } from "./backbone.js";
import { EmbeddingSet } from "./femb.js";
import { Corpus, batchTensor, loadCorpus } from "./images.js";
import { ModelSpec } from "./models.js";

/**
 * Batch embedding extraction: every image in a directory through one frozen
 * model, rows ordered by sorted file stem. Extraction runs in eval mode with
 * no randomness beyond the seeded weights, so two passes over the same files
 * produce identical bytes.
 */

export interface EmbedOptions {
  seed?: number | bigint;
  batchSize?: number;
  /** Encoder checkpoint (from self-supervised pretraining) to load before extracting. */
  checkpoint?: string;
}

export function embedCorpus(corpus: Corpus, spec: ModelSpec, options: EmbedOptions = {}): EmbeddingSet {
  const seed = options.seed ?? 0;
  const batchSize = options.batchSize ?? 8;
  if (!Number.isInteger(batchSize) || batchSize <= 0) {
    throw new RangeError(`batch size must be a positive integer, got ${batchSize}`);
  }
  if (corpus.side !== spec.inputResolution) {
    throw new RangeError(
      `corpus is prepared at ${corpus.side}px but ${spec.family} expects ${spec.inputResolution}px`,
    );
  }
  const embedder = buildEmbedder(spec, seed);
  try {
    if (options.checkpoint !== undefined) {
      embedder.weights.restore(options.checkpoint, { onlyPrefix: "enc." });
    }
    const rows = corpus.ids.length;
    const matrix = new Float32Array(rows * spec.embeddingDim);
    for (let start = 0; start < rows; start += batchSize) {
      const count = Math.min(batchSize, rows - start);
      const indices = Array.from({ length: count }, (_, i) => start + i);
      const batch = batchTensor(corpus, indices);
      const embedded = embedder.forward(batch);
      matrix.set(embedded.dataSync() as Float32Array, start * spec.embeddingDim);
      embedded.dispose();
      batch.dispose();
    }
    return { ids: [...corpus.ids], matrix, dim: spec.embeddingDim };
  } finally {
    embedder.dispose();
  }
}

export function embedDirectory(imagesDir: string, spec: ModelSpec, options: EmbedOptions = {}): EmbeddingSet {
  return embedCorpus(loadCorpus(imagesDir, spec.inputResolution), spec, options);
}
