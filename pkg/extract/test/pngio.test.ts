import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { PNG } from "pngjs";
import { afterAll, describe, expect, it } from "vitest";

import { readMaskPng, readRgbPng, writeMaskPng, writeRgbPng } from "../src/pngio.js";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "png-test-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

describe("rgb png io", () => {
  it("round-trips 8-bit color exactly", () => {
    const file = path.join(tmp, "rgb.png");
    const width = 5;
    const height = 3;
    const data = new Float32Array(width * height * 3);
    for (let i = 0; i < data.length; i++) {
      data[i] = ((i * 17) % 256) / 255;
    }
    writeRgbPng(file, { width, height, data });
    const back = readRgbPng(file);
    expect(back.width).toBe(width);
    expect(back.height).toBe(height);
    for (let i = 0; i < data.length; i++) {
      expect(Math.round(back.data[i]! * 255)).toBe(Math.round(data[i]! * 255));
    }
  });
});

describe("mask png io", () => {
  it("encodes the four classes as black, red, green and blue", () => {
    const file = path.join(tmp, "mask.png");
    writeMaskPng(file, Uint8Array.from([0, 1, 2, 3]), 2, 2);
    const png = PNG.sync.read(fs.readFileSync(file));
    const colors: number[][] = [];
    for (let i = 0; i < 4; i++) {
      colors.push([png.data[i * 4]!, png.data[i * 4 + 1]!, png.data[i * 4 + 2]!]);
    }
    expect(colors).toEqual([
      [0, 0, 0],
      [255, 0, 0],
      [0, 255, 0],
      [0, 0, 255],
    ]);
  });

  it("round-trips class indices", () => {
    const file = path.join(tmp, "mask2.png");
    const classes = Uint8Array.from([3, 3, 0, 1, 2, 0]);
    writeMaskPng(file, classes, 3, 2);
    const back = readMaskPng(file);
    expect([...back.classes]).toEqual([...classes]);
    expect(back.width).toBe(3);
    expect(back.height).toBe(2);
  });

  it("rejects out-of-range classes and wrong sizes", () => {
    expect(() => writeMaskPng(path.join(tmp, "bad.png"), Uint8Array.from([4]), 1, 1)).toThrow(
      /out of range/,
    );
    expect(() => writeMaskPng(path.join(tmp, "bad.png"), Uint8Array.from([0, 0]), 3, 1)).toThrow(
      /expected 3x1/,
    );
  });
});
