import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { listPngStems } from "./images.js";
import { readRgbPng, writeMaskPng } from "./pngio.js";
import { CheckpointError, WeightStore } from "./weights.js";

/**
 * Encoder-decoder segmentation network classifying every pixel into
 * background / handwriting / printed text / form elements, emitting the
 * color-coded mask PNGs the evaluation side consumes. Inference needs a
 * trained checkpoint; without one the operation is unavailable and the
 * pipeline runs on externally provided masks.
 */

export const SEG_CLASSES = 4;

const CHANNELS = [16, 32, 64];

export interface Unet {
  weights: WeightStore;
  /** images: [1, H, W, 3] in [0, 1], H and W divisible by 4; logits [1, H, W, 4]. */
  forward(images: tf.Tensor4D): tf.Tensor4D;
  dispose(): void;
}

function convPair(store: WeightStore, name: string, cIn: number, cOut: number): void {
  store.gaussian(`${name}.a.kernel`, [3, 3, cIn, cOut], Math.sqrt(2 / (9 * cIn)));
  store.constant(`${name}.a.bias`, [cOut], 0);
  store.gaussian(`${name}.b.kernel`, [3, 3, cOut, cOut], Math.sqrt(2 / (9 * cOut)));
  store.constant(`${name}.b.bias`, [cOut], 0);
}

function runPair(store: WeightStore, name: string, x: tf.Tensor4D): tf.Tensor4D {
  const a = tf.relu(
    tf.conv2d(x, store.get(`${name}.a.kernel`) as unknown as tf.Tensor4D, 1, "same")
      .add(store.get(`${name}.a.bias`)),
  ) as tf.Tensor4D;
  return tf.relu(
    tf.conv2d(a, store.get(`${name}.b.kernel`) as unknown as tf.Tensor4D, 1, "same")
      .add(store.get(`${name}.b.bias`)),
  ) as tf.Tensor4D;
}

export function buildUnet(seed: number | bigint): Unet {
  const store = new WeightStore(seed);
  convPair(store, "unet.enc0", 3, CHANNELS[0]!);
  convPair(store, "unet.enc1", CHANNELS[0]!, CHANNELS[1]!);
  convPair(store, "unet.mid", CHANNELS[1]!, CHANNELS[2]!);
  convPair(store, "unet.dec1", CHANNELS[2]! + CHANNELS[1]!, CHANNELS[1]!);
  convPair(store, "unet.dec0", CHANNELS[1]! + CHANNELS[0]!, CHANNELS[0]!);
  store.gaussian("unet.head.kernel", [1, 1, CHANNELS[0]!, SEG_CLASSES], Math.sqrt(2 / CHANNELS[0]!));
  store.constant("unet.head.bias", [SEG_CLASSES], 0);
  const forward = (images: tf.Tensor4D): tf.Tensor4D =>
    tf.tidy(() => {
      const [, height, width] = images.shape;
      if (height % 4 !== 0 || width % 4 !== 0) {
        throw new RangeError(`input ${width}x${height} must be divisible by 4`);
      }
      const x = images.sub(0.5).div(0.5) as tf.Tensor4D;
      const enc0 = runPair(store, "unet.enc0", x);
      const enc1 = runPair(store, "unet.enc1", tf.maxPool(enc0, 2, 2, "same"));
      const mid = runPair(store, "unet.mid", tf.maxPool(enc1, 2, 2, "same"));
      const up1 = tf.image.resizeNearestNeighbor(mid, [height / 2, width / 2]);
      const dec1 = runPair(store, "unet.dec1", tf.concat([up1, enc1], 3) as tf.Tensor4D);
      const up0 = tf.image.resizeNearestNeighbor(dec1, [height, width]);
      const dec0 = runPair(store, "unet.dec0", tf.concat([up0, enc0], 3) as tf.Tensor4D);
      return tf.conv2d(dec0, store.get("unet.head.kernel") as unknown as tf.Tensor4D, 1, "same")
        .add(store.get("unet.head.bias")) as tf.Tensor4D;
    });
  return { weights: store, forward, dispose: () => store.dispose() };
}

/** Per-pixel class indices for one image at its native size (padded to /4 internally). */
export function segmentImage(unet: Unet, image: { width: number; height: number; data: Float32Array }): Uint8Array {
  return tf.tidy(() => {
    const padH = (4 - (image.height % 4)) % 4;
    const padW = (4 - (image.width % 4)) % 4;
    let tensor = tf.tensor4d(image.data, [1, image.height, image.width, 3]);
    if (padH > 0 || padW > 0) {
      // Pad with white so the border reads as blank page, then crop the logits back.
      tensor = tf.pad(tensor, [[0, 0], [0, padH], [0, padW], [0, 0]], 1) as tf.Tensor4D;
    }
    let logits = unet.forward(tensor);
    if (padH > 0 || padW > 0) {
      logits = tf.slice(logits, [0, 0, 0, 0], [1, image.height, image.width, SEG_CLASSES]) as tf.Tensor4D;
    }
    const classes = tf.argMax(logits, 3).dataSync();
    return Uint8Array.from(classes);
  });
}

export interface SegmentResult {
  stems: string[];
}

/** Segment every PNG in a directory, writing one color-coded mask per image. */
export function segmentDirectory(
  imagesDir: string,
  checkpointPath: string,
  outDir: string,
  seed: number | bigint = 0,
): SegmentResult {
  if (!fs.existsSync(checkpointPath)) {
    throw new CheckpointError(
      `segmentation checkpoint ${checkpointPath} not found; without one this operation is unavailable`,
    );
  }
  const unet = buildUnet(seed);
  try {
    unet.weights.restore(checkpointPath);
    const stems = listPngStems(imagesDir);
    fs.mkdirSync(outDir, { recursive: true });
    for (const stem of stems) {
      const image = readRgbPng(path.join(imagesDir, `${stem}.png`));
      const classes = segmentImage(unet, image);
      writeMaskPng(path.join(outDir, `${stem}.png`), classes, image.width, image.height);
    }
    return { stems };
  } finally {
    unet.dispose();
  }
}
