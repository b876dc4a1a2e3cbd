import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { readRgbPng } from "./pngio.js";

/**
 * Image corpus loading: PNG files keyed by file stem, resized to the model's
 * square input. Stems are the ids that flow through every interchange file.
 */

export interface Corpus {
  ids: string[];
  /** One buffer per image, side*side*3 floats in [0, 1], same order as ids. */
  pixels: Float32Array[];
  side: number;
}

export class CorpusError extends Error {}

export function listPngStems(dir: string): string[] {
  let names: string[];
  try {
    names = fs.readdirSync(dir);
  } catch {
    throw new CorpusError(`cannot read image directory ${dir}`);
  }
  const stems = names
    .filter((name) => name.toLowerCase().endsWith(".png"))
    .map((name) => name.slice(0, -4))
    .sort();
  if (stems.length === 0) {
    throw new CorpusError(`no .png images in ${dir}`);
  }
  return stems;
}

/** Bilinear-resize one decoded image to side x side. */
function resizeTo(side: number, image: { width: number; height: number; data: Float32Array }): Float32Array {
  if (image.width === side && image.height === side) {
    return image.data;
  }
  return tf.tidy(() => {
    const tensor = tf.tensor3d(image.data, [image.height, image.width, 3]);
    return tf.image.resizeBilinear(tensor, [side, side]).dataSync() as Float32Array;
  });
}

export function loadCorpus(dir: string, side: number): Corpus {
  const stems = listPngStems(dir);
  const pixels = stems.map((stem) => resizeTo(side, readRgbPng(path.join(dir, `${stem}.png`))));
  return { ids: stems, pixels, side };
}

/** Stack selected corpus images into a [n, side, side, 3] batch tensor. */
export function batchTensor(corpus: Corpus, indices: ArrayLike<number>): tf.Tensor4D {
  const n = indices.length;
  const size = corpus.side * corpus.side * 3;
  const data = new Float32Array(n * size);
  for (let i = 0; i < n; i++) {
    data.set(corpus.pixels[indices[i] as number]!, i * size);
  }
  return tf.tensor4d(data, [n, corpus.side, corpus.side, 3]);
}
