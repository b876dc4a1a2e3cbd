import * as fs from "node:fs";

import { PNG } from "pngjs";

import { atomicWriteFile } from "./femb.js";

/** Per-pixel content classes, index-coded the same way the evaluation side reads them. */
export const MASK_CLASSES = ["background", "handwriting", "printed_text", "form_elements"] as const;

/** Color coding for mask PNGs: black background, red handwriting, green printed text, blue form elements. */
const MASK_COLORS: ReadonlyArray<readonly [number, number, number]> = [
  [0, 0, 0],
  [255, 0, 0],
  [0, 255, 0],
  [0, 0, 255],
];

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB floats in [0, 1], length width*height*3. */
  data: Float32Array;
}

export function readRgbPng(filePath: string): RgbImage {
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const pixels = png.width * png.height;
  const data = new Float32Array(pixels * 3);
  for (let i = 0; i < pixels; i++) {
    data[i * 3] = png.data[i * 4]! / 255;
    data[i * 3 + 1] = png.data[i * 4 + 1]! / 255;
    data[i * 3 + 2] = png.data[i * 4 + 2]! / 255;
  }
  return { width: png.width, height: png.height, data };
}

export function writeRgbPng(filePath: string, image: RgbImage): void {
  const png = new PNG({ width: image.width, height: image.height });
  const pixels = image.width * image.height;
  for (let i = 0; i < pixels; i++) {
    for (let c = 0; c < 3; c++) {
      const value = image.data[i * 3 + c]!;
      png.data[i * 4 + c] = Math.max(0, Math.min(255, Math.round(value * 255)));
    }
    png.data[i * 4 + 3] = 255;
  }
  atomicWriteFile(filePath, PNG.sync.write(png));
}

/** Write class indices as a color-coded mask PNG. */
export function writeMaskPng(
  filePath: string,
  classes: Uint8Array,
  width: number,
  height: number,
): void {
  if (classes.length !== width * height) {
    throw new RangeError(`mask has ${classes.length} pixels, expected ${width}x${height}`);
  }
  const png = new PNG({ width, height });
  for (let i = 0; i < classes.length; i++) {
    const cls = classes[i]!;
    const color = MASK_COLORS[cls];
    if (color === undefined) {
      throw new RangeError(`class index ${cls} out of range at pixel ${i}`);
    }
    png.data[i * 4] = color[0];
    png.data[i * 4 + 1] = color[1];
    png.data[i * 4 + 2] = color[2];
    png.data[i * 4 + 3] = 255;
  }
  atomicWriteFile(filePath, PNG.sync.write(png));
}

/** Decode a color-coded mask PNG back to class indices (exact colors only). */
export function readMaskPng(filePath: string): { classes: Uint8Array; width: number; height: number } {
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const pixels = png.width * png.height;
  const classes = new Uint8Array(pixels);
  for (let i = 0; i < pixels; i++) {
    const r = png.data[i * 4]!;
    const g = png.data[i * 4 + 1]!;
    const b = png.data[i * 4 + 2]!;
    const cls = MASK_COLORS.findIndex((c) => c[0] === r && c[1] === g && c[2] === b);
    if (cls < 0) {
      throw new RangeError(`pixel ${i} has color ${r},${g},${b}, not a mask color`);
    }
    classes[i] = cls;
  }
  return { classes, width: png.width, height: png.height };
}
