import * as tf from "@tensorflow/tfjs";

import { ModelFamily, ModelSpec } from "./models.js";
import { WeightStore } from "./weights.js";
import {
  VitConfig,
  buildVitWeights,
  encodeTokens,
  patchTokens,
  prependClassToken,
} from "./vit.js";

/**
 * Frozen-backbone stand-ins, one per supported family, with the family's
 * documented pooling rule and embedding width. Weights are deterministic
 * functions of (family, resolution, seed); published pretrained checkpoints
 * are not bundled, so these models exercise the interchange contract rather
 * than reproduce any particular checkpoint's features.
 */

export interface Embedder {
  spec: ModelSpec;
  weights: WeightStore;
  /** images: [batch, side, side, 3] floats in [0, 1]; returns [batch, embeddingDim]. */
  forward(images: tf.Tensor4D): tf.Tensor2D;
  dispose(): void;
}

interface VitTrunk {
  kind: "vit";
  patchSize: number;
  width: number;
  depth: number;
  heads: number;
  pooling: "class-token" | "mean-patch-tokens";
}

interface ResnetTrunk {
  kind: "resnet";
  channels: number[];
}

const TRUNKS: Record<ModelFamily, VitTrunk | ResnetTrunk> = {
  ResNet18: { kind: "resnet", channels: [32, 64, 128] },
  ResNet50: { kind: "resnet", channels: [48, 96, 192] },
  "CLIP-B/32": { kind: "vit", patchSize: 32, width: 64, depth: 2, heads: 4, pooling: "class-token" },
  "CLIP-L/14-336": { kind: "vit", patchSize: 14, width: 64, depth: 2, heads: 4, pooling: "class-token" },
  "DiT-Base": { kind: "vit", patchSize: 16, width: 64, depth: 2, heads: 4, pooling: "mean-patch-tokens" },
  "DiT-Large": { kind: "vit", patchSize: 16, width: 96, depth: 2, heads: 6, pooling: "mean-patch-tokens" },
  "MAE-448": { kind: "vit", patchSize: 32, width: 64, depth: 2, heads: 4, pooling: "class-token" },
};

/** Encoder trunk configuration for a transformer family at a given spec. */
export function vitConfigFor(spec: ModelSpec): VitConfig {
  const trunk = TRUNKS[spec.family];
  if (trunk.kind !== "vit") {
    throw new RangeError(`${spec.family} is not a transformer family`);
  }
  return {
    imageSize: spec.inputResolution,
    patchSize: trunk.patchSize,
    width: trunk.width,
    depth: trunk.depth,
    heads: trunk.heads,
    withClassToken: trunk.pooling === "class-token",
  };
}

const ENC = "enc";

function buildResnetWeights(store: WeightStore, channels: number[], embeddingDim: number): void {
  let cIn = 3;
  store.gaussian(`${ENC}.stem.kernel`, [3, 3, cIn, channels[0]!], Math.sqrt(2 / (9 * cIn)));
  store.constant(`${ENC}.stem.bias`, [channels[0]!], 0);
  cIn = channels[0]!;
  for (let s = 0; s < channels.length; s++) {
    const cOut = channels[s]!;
    store.gaussian(`${ENC}.s${s}.down.kernel`, [3, 3, cIn, cOut], Math.sqrt(2 / (9 * cIn)));
    store.constant(`${ENC}.s${s}.down.bias`, [cOut], 0);
    store.gaussian(`${ENC}.s${s}.conv.kernel`, [3, 3, cOut, cOut], Math.sqrt(2 / (9 * cOut)));
    store.constant(`${ENC}.s${s}.conv.bias`, [cOut], 0);
    cIn = cOut;
  }
  store.gaussian(`${ENC}.head.kernel`, [1, 1, cIn, embeddingDim], Math.sqrt(2 / cIn));
  store.constant(`${ENC}.head.bias`, [embeddingDim], 0);
}

function resnetFeatures(store: WeightStore, channels: number[], images: tf.Tensor4D): tf.Tensor4D {
  let x = tf.relu(
    tf.conv2d(images, store.get(`${ENC}.stem.kernel`) as unknown as tf.Tensor4D, 2, "same")
      .add(store.get(`${ENC}.stem.bias`)),
  ) as tf.Tensor4D;
  for (let s = 0; s < channels.length; s++) {
    const down = tf.relu(
      tf.conv2d(x, store.get(`${ENC}.s${s}.down.kernel`) as unknown as tf.Tensor4D, 2, "same")
        .add(store.get(`${ENC}.s${s}.down.bias`)),
    ) as tf.Tensor4D;
    const conv = tf.conv2d(down, store.get(`${ENC}.s${s}.conv.kernel`) as unknown as tf.Tensor4D, 1, "same")
      .add(store.get(`${ENC}.s${s}.conv.bias`));
    x = tf.relu(down.add(conv)) as tf.Tensor4D;
  }
  return tf.relu(
    tf.conv2d(x, store.get(`${ENC}.head.kernel`) as unknown as tf.Tensor4D, 1, "same")
      .add(store.get(`${ENC}.head.bias`)),
  ) as tf.Tensor4D;
}

function normalize(images: tf.Tensor4D): tf.Tensor4D {
  return images.sub(0.5).div(0.5) as tf.Tensor4D;
}

export function buildEmbedder(spec: ModelSpec, seed: number | bigint): Embedder {
  const trunk = TRUNKS[spec.family];
  const store = new WeightStore(seed);
  if (trunk.kind === "resnet") {
    buildResnetWeights(store, trunk.channels, spec.embeddingDim);
    return {
      spec,
      weights: store,
      forward: (images) =>
        tf.tidy(() => {
          // Global average pooling of the final feature map.
          const features = resnetFeatures(store, trunk.channels, normalize(images));
          return features.mean([1, 2]) as tf.Tensor2D;
        }),
      dispose: () => store.dispose(),
    };
  }
  const cfg = vitConfigFor(spec);
  buildVitWeights(store, ENC, cfg);
  store.gaussian("proj.kernel", [cfg.width, spec.embeddingDim], 0.02);
  store.constant("proj.bias", [spec.embeddingDim], 0);
  return {
    spec,
    weights: store,
    forward: (images) =>
      tf.tidy(() => {
        let tokens = patchTokens(store, ENC, cfg, normalize(images));
        if (cfg.withClassToken) {
          tokens = prependClassToken(store, ENC, tokens);
        }
        const encoded = encodeTokens(store, ENC, cfg, tokens);
        // Class-token families read token 0; the others mean-pool patch tokens.
        const pooled =
          trunk.pooling === "class-token"
            ? (encoded.slice([0, 0, 0], [-1, 1, -1]).squeeze([1]) as tf.Tensor2D)
            : (encoded.mean(1) as tf.Tensor2D);
        return pooled
          .matMul(store.get("proj.kernel") as unknown as tf.Tensor2D)
          .add(store.get("proj.bias")) as tf.Tensor2D;
      }),
    dispose: () => store.dispose(),
  };
}
