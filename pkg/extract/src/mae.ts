import * as tf from "@tensorflow/tfjs";

import { vitConfigFor } from "./backbone.js";
import { Corpus } from "./images.js";
import { AblationSpec, ModelSpec, modelSpec } from "./models.js";
import { Prng, deriveSeed } from "./prng.js";
import {
  TowerConfig,
  buildTowerWeights,
  buildVitWeights,
  dense,
  encodeTokens,
  patchTokens,
  patchify,
  prependClassToken,
  vitPatchCount,
} from "./vit.js";
import { WeightStore } from "./weights.js";

/**
 * Masked-autoencoder pretraining on a document corpus: 75% of patches hidden,
 * a shallow decoder reconstructs them, loss is mean squared error on the
 * hidden patches only. Ablations: random input translation, and running on
 * mask-applied images (prepared up front; training and any later extraction
 * should then use the same modality). The trained encoder saves under the
 * same weight names the extraction side expects.
 */

export interface MaeTrainOptions {
  seed?: number | bigint;
  epochs?: number;
  batchSize?: number;
  baseLr?: number;
  maskRatio?: number;
}

export interface MaeTrainResult {
  spec: ModelSpec;
  epochLosses: number[];
  save(path: string): void;
  dispose(): void;
}

const DECODER: TowerConfig = { width: 32, depth: 1, heads: 4 };

/** Translate an image by (dx, dy) pixels, filling vacated area with white. */
export function translateImage(
  pixels: Float32Array,
  side: number,
  dx: number,
  dy: number,
): Float32Array {
  const out = new Float32Array(pixels.length).fill(1);
  for (let y = 0; y < side; y++) {
    const srcY = y - dy;
    if (srcY < 0 || srcY >= side) continue;
    for (let x = 0; x < side; x++) {
      const srcX = x - dx;
      if (srcX < 0 || srcX >= side) continue;
      const dst = (y * side + x) * 3;
      const src = (srcY * side + srcX) * 3;
      out[dst] = pixels[src]!;
      out[dst + 1] = pixels[src + 1]!;
      out[dst + 2] = pixels[src + 2]!;
    }
  }
  return out;
}

export function trainMae(
  corpus: Corpus,
  ablation: AblationSpec,
  options: MaeTrainOptions = {},
): MaeTrainResult {
  const spec = modelSpec("MAE-448");
  if (corpus.side !== spec.inputResolution) {
    throw new RangeError(`corpus is ${corpus.side}px, pretraining expects ${spec.inputResolution}px`);
  }
  const seed = options.seed ?? 0;
  const epochs = options.epochs ?? 20;
  const batchSize = options.batchSize ?? 8;
  const baseLr = options.baseLr ?? 1.5e-4;
  const maskRatio = options.maskRatio ?? 0.75;
  if (!Number.isInteger(epochs) || epochs <= 0) {
    throw new RangeError(`epochs must be a positive integer, got ${epochs}`);
  }
  if (!(maskRatio > 0 && maskRatio < 1)) {
    throw new RangeError(`mask ratio must be in (0, 1), got ${maskRatio}`);
  }
  if (corpus.ids.length < batchSize) {
    throw new RangeError(
      `corpus has ${corpus.ids.length} image(s), smaller than one batch of ${batchSize}`,
    );
  }

  const cfg = vitConfigFor(spec);
  const patches = vitPatchCount(cfg);
  const visible = Math.max(1, Math.round(patches * (1 - maskRatio)));
  const store = new WeightStore(seed);
  buildVitWeights(store, "enc", cfg);
  store.gaussian("dec.embed.kernel", [cfg.width, DECODER.width], 0.02);
  store.constant("dec.embed.bias", [DECODER.width], 0);
  store.gaussian("dec.mask", [1, 1, DECODER.width], 0.02);
  store.gaussian("dec.pos", [1, patches, DECODER.width], 0.02);
  buildTowerWeights(store, "dec", DECODER);
  store.gaussian("dec.head.kernel", [DECODER.width, cfg.patchSize * cfg.patchSize * 3], 0.02);
  store.constant("dec.head.bias", [cfg.patchSize * cfg.patchSize * 3], 0);

  const optimizer = tf.train.adam(baseLr);
  const orderRng = new Prng(deriveSeed(seed, "mae-order"));
  const augmentRng = new Prng(deriveSeed(seed, "mae-translate"));
  const maskRng = new Prng(deriveSeed(seed, "mae-mask"));
  const maxShift = Math.floor(corpus.side * ablation.translateFrac);
  const epochLosses: number[] = [];

  for (let epoch = 0; epoch < epochs; epoch++) {
    // Cosine learning-rate schedule over epochs.
    const lr = baseLr * 0.5 * (1 + Math.cos((Math.PI * epoch) / epochs));
    (optimizer as unknown as { learningRate: number }).learningRate = lr;
    const order = orderRng.permutation(corpus.ids.length);
    let lossSum = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += batchSize) {
      const slice = Array.from(order.slice(start, Math.min(start + batchSize, order.length)));
      const b = slice.length;
      const imageData = new Float32Array(b * corpus.side * corpus.side * 3);
      for (let i = 0; i < b; i++) {
        let pixels = corpus.pixels[slice[i]!]!;
        if (maxShift > 0) {
          const dx = augmentRng.nextInt(2 * maxShift + 1) - maxShift;
          const dy = augmentRng.nextInt(2 * maxShift + 1) - maxShift;
          pixels = translateImage(pixels, corpus.side, dx, dy);
        }
        imageData.set(pixels, i * corpus.side * corpus.side * 3);
      }
      const visIdx = new Int32Array(b * visible);
      const restoreIdx = new Int32Array(b * patches);
      const maskFlag = new Float32Array(b * patches).fill(1);
      for (let i = 0; i < b; i++) {
        const perm = maskRng.permutation(patches);
        for (let j = 0; j < patches; j++) {
          restoreIdx[i * patches + perm[j]!] = j;
        }
        for (let j = 0; j < visible; j++) {
          visIdx[i * visible + j] = perm[j]!;
          maskFlag[i * patches + perm[j]!] = 0;
        }
      }
      const images = tf.tensor4d(imageData, [b, corpus.side, corpus.side, 3]);
      const visTensor = tf.tensor2d(visIdx, [b, visible], "int32");
      const restoreTensor = tf.tensor2d(restoreIdx, [b, patches], "int32");
      const maskTensor = tf.tensor2d(maskFlag, [b, patches]);
      const { value, grads } = tf.variableGrads(() => {
        const normalized = images.sub(0.5).div(0.5) as tf.Tensor4D;
        const tokens = patchTokens(store, "enc", cfg, normalized);
        const visibleTokens = tf.gather(tokens, visTensor, 1, 1) as tf.Tensor3D;
        const encoded = encodeTokens(store, "enc", cfg, prependClassToken(store, "enc", visibleTokens));
        const encodedPatches = encoded.slice([0, 1, 0], [-1, -1, -1]) as tf.Tensor3D;
        const projected = dense(encodedPatches, store.get("dec.embed.kernel"), store.get("dec.embed.bias"));
        const maskTokens = store.get("dec.mask").tile([b, patches - visible, 1]) as tf.Tensor3D;
        const permuted = tf.concat([projected, maskTokens], 1) as tf.Tensor3D;
        const restored = tf.gather(permuted, restoreTensor, 1, 1) as tf.Tensor3D;
        const decoded = encodeTokens(store, "dec", DECODER, restored.add(store.get("dec.pos")) as tf.Tensor3D);
        const predicted = dense(decoded, store.get("dec.head.kernel"), store.get("dec.head.bias"));
        const targets = patchify(normalized, cfg.patchSize);
        const perPatch = predicted.sub(targets).square().mean(-1);
        return perPatch.mul(maskTensor).sum().div(maskTensor.sum()) as tf.Scalar;
      }, store.list());
      optimizer.applyGradients(
        Object.entries(grads).map(([name, tensor]) => ({ name, tensor })),
      );
      lossSum += value.dataSync()[0]!;
      batches += 1;
      value.dispose();
      for (const name of Object.keys(grads)) grads[name]!.dispose();
      images.dispose();
      visTensor.dispose();
      restoreTensor.dispose();
      maskTensor.dispose();
    }
    epochLosses.push(lossSum / batches);
  }
  optimizer.dispose();

  return {
    spec,
    epochLosses,
    save: (path) => store.save(path),
    dispose: () => store.dispose(),
  };
}
