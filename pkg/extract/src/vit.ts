import * as tf from "@tensorflow/tfjs";

import { WeightStore } from "./weights.js";

/**
 * Minimal vision-transformer trunk built directly on tensor ops: patch
 * embedding, learned positions, pre-norm attention blocks, final layer norm.
 * Callers decide whether a class token is prepended and how tokens pool.
 */

export interface VitConfig {
  imageSize: number;
  patchSize: number;
  width: number;
  depth: number;
  heads: number;
  withClassToken: boolean;
}

export function vitPatchCount(cfg: VitConfig): number {
  if (cfg.imageSize % cfg.patchSize !== 0) {
    throw new RangeError(`image size ${cfg.imageSize} not divisible by patch size ${cfg.patchSize}`);
  }
  const grid = cfg.imageSize / cfg.patchSize;
  return grid * grid;
}

const INIT_SCALE = 0.02;

/** Transformer tower shape, independent of how tokens are produced. */
export interface TowerConfig {
  width: number;
  depth: number;
  heads: number;
}

/** Create the block and final-norm weights for a token tower under `prefix`. */
export function buildTowerWeights(store: WeightStore, prefix: string, cfg: TowerConfig): void {
  if (cfg.width % cfg.heads !== 0) {
    throw new RangeError(`width ${cfg.width} not divisible by ${cfg.heads} heads`);
  }
  for (let b = 0; b < cfg.depth; b++) {
    const block = `${prefix}.b${b}`;
    store.constant(`${block}.ln1.gamma`, [cfg.width], 1);
    store.constant(`${block}.ln1.beta`, [cfg.width], 0);
    store.gaussian(`${block}.attn.qkv.kernel`, [cfg.width, 3 * cfg.width], INIT_SCALE);
    store.constant(`${block}.attn.qkv.bias`, [3 * cfg.width], 0);
    store.gaussian(`${block}.attn.out.kernel`, [cfg.width, cfg.width], INIT_SCALE);
    store.constant(`${block}.attn.out.bias`, [cfg.width], 0);
    store.constant(`${block}.ln2.gamma`, [cfg.width], 1);
    store.constant(`${block}.ln2.beta`, [cfg.width], 0);
    store.gaussian(`${block}.mlp.fc1.kernel`, [cfg.width, 4 * cfg.width], INIT_SCALE);
    store.constant(`${block}.mlp.fc1.bias`, [4 * cfg.width], 0);
    store.gaussian(`${block}.mlp.fc2.kernel`, [4 * cfg.width, cfg.width], INIT_SCALE);
    store.constant(`${block}.mlp.fc2.bias`, [cfg.width], 0);
  }
  store.constant(`${prefix}.lnf.gamma`, [cfg.width], 1);
  store.constant(`${prefix}.lnf.beta`, [cfg.width], 0);
}

/** Create every trunk weight under `prefix` so checkpoints are name-stable. */
export function buildVitWeights(store: WeightStore, prefix: string, cfg: VitConfig): void {
  const patches = vitPatchCount(cfg);
  store.gaussian(`${prefix}.patch.kernel`, [cfg.patchSize * cfg.patchSize * 3, cfg.width], INIT_SCALE);
  store.constant(`${prefix}.patch.bias`, [cfg.width], 0);
  store.gaussian(`${prefix}.pos`, [1, patches, cfg.width], INIT_SCALE);
  if (cfg.withClassToken) {
    store.gaussian(`${prefix}.cls`, [1, 1, cfg.width], INIT_SCALE);
    store.gaussian(`${prefix}.clsPos`, [1, 1, cfg.width], INIT_SCALE);
  }
  buildTowerWeights(store, prefix, cfg);
}

/** Cut [B, side, side, 3] images into [B, patches, patchSize*patchSize*3] rows. */
export function patchify(images: tf.Tensor4D, patchSize: number): tf.Tensor3D {
  const [batch, height, width] = images.shape;
  if (height % patchSize !== 0 || width % patchSize !== 0) {
    throw new RangeError(`image ${width}x${height} not divisible by patch size ${patchSize}`);
  }
  const gridY = height / patchSize;
  const gridX = width / patchSize;
  return images
    .reshape([batch, gridY, patchSize, gridX, patchSize, 3])
    .transpose([0, 1, 3, 2, 4, 5])
    .reshape([batch, gridY * gridX, patchSize * patchSize * 3]) as tf.Tensor3D;
}

function layerNorm(x: tf.Tensor, gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor {
  const { mean, variance } = tf.moments(x, -1, true);
  return x.sub(mean).div(variance.add(1e-5).sqrt()).mul(gamma).add(beta);
}

/** Dense over the last axis of a [B, T, in] tensor. */
export function dense(x: tf.Tensor3D, kernel: tf.Tensor, bias: tf.Tensor): tf.Tensor3D {
  const [batch, tokens, inDim] = x.shape;
  const flat = x.reshape([batch * tokens, inDim]);
  const out = flat.matMul(kernel as tf.Tensor2D).add(bias);
  return out.reshape([batch, tokens, kernel.shape[1]!]) as tf.Tensor3D;
}

function gelu(x: tf.Tensor): tf.Tensor {
  return x.mul(0.5).mul(tf.erf(x.div(Math.SQRT2)).add(1));
}

function attention(store: WeightStore, block: string, heads: number, x: tf.Tensor3D): tf.Tensor3D {
  const [batch, tokens, width] = x.shape;
  const headDim = width / heads;
  const qkv = dense(x, store.get(`${block}.attn.qkv.kernel`), store.get(`${block}.attn.qkv.bias`));
  const parts = tf.split(qkv, 3, -1) as [tf.Tensor3D, tf.Tensor3D, tf.Tensor3D];
  const toHeads = (t: tf.Tensor3D) =>
    t.reshape([batch, tokens, heads, headDim]).transpose([0, 2, 1, 3]);
  const q = toHeads(parts[0]);
  const k = toHeads(parts[1]);
  const v = toHeads(parts[2]);
  const scores = tf.matMul(q, k, false, true).div(Math.sqrt(headDim));
  const mixed = tf.matMul(tf.softmax(scores, -1), v);
  const merged = mixed.transpose([0, 2, 1, 3]).reshape([batch, tokens, width]) as tf.Tensor3D;
  return dense(merged, store.get(`${block}.attn.out.kernel`), store.get(`${block}.attn.out.bias`));
}

/** Patch-embed images to tokens with positions added; no class token yet. */
export function patchTokens(
  store: WeightStore,
  prefix: string,
  cfg: VitConfig,
  images: tf.Tensor4D,
): tf.Tensor3D {
  // Dense over patchified rows; equals a stride-p convolution but keeps the
  // whole pipeline on the fast matmul path.
  const rows = patchify(images, cfg.patchSize);
  const tokens = dense(rows, store.get(`${prefix}.patch.kernel`), store.get(`${prefix}.patch.bias`));
  return tokens.add(store.get(`${prefix}.pos`)) as tf.Tensor3D;
}

/** Prepend the class token (with its own position) to a token sequence. */
export function prependClassToken(
  store: WeightStore,
  prefix: string,
  tokens: tf.Tensor3D,
): tf.Tensor3D {
  const batch = tokens.shape[0];
  const cls = store.get(`${prefix}.cls`).add(store.get(`${prefix}.clsPos`));
  const tiled = cls.tile([batch, 1, 1]) as tf.Tensor3D;
  return tf.concat([tiled, tokens], 1) as tf.Tensor3D;
}

/** Run the transformer blocks and the final layer norm over a token sequence. */
export function encodeTokens(
  store: WeightStore,
  prefix: string,
  cfg: TowerConfig,
  tokens: tf.Tensor3D,
): tf.Tensor3D {
  let x = tokens;
  for (let b = 0; b < cfg.depth; b++) {
    const block = `${prefix}.b${b}`;
    const normed1 = layerNorm(x, store.get(`${block}.ln1.gamma`), store.get(`${block}.ln1.beta`));
    x = x.add(attention(store, block, cfg.heads, normed1 as tf.Tensor3D)) as tf.Tensor3D;
    const normed2 = layerNorm(x, store.get(`${block}.ln2.gamma`), store.get(`${block}.ln2.beta`));
    const hidden = gelu(dense(normed2 as tf.Tensor3D, store.get(`${block}.mlp.fc1.kernel`), store.get(`${block}.mlp.fc1.bias`)));
    x = x.add(dense(hidden as tf.Tensor3D, store.get(`${block}.mlp.fc2.kernel`), store.get(`${block}.mlp.fc2.bias`))) as tf.Tensor3D;
  }
  return layerNorm(x, store.get(`${prefix}.lnf.gamma`), store.get(`${prefix}.lnf.beta`)) as tf.Tensor3D;
}
