import * as fs from "node:fs";
import * as path from "node:path";

import { writeRgbPng } from "../src/pngio.js";
import { Prng } from "../src/prng.js";

/** Write `count` deterministic synthetic form-like PNGs into `dir`. */
export function writeSyntheticImages(dir: string, count: number, side: number, seed = 0): string[] {
  fs.mkdirSync(dir, { recursive: true });
  const stems: string[] = [];
  for (let i = 0; i < count; i++) {
    const rng = new Prng(seed * 1000 + i);
    const data = new Float32Array(side * side * 3).fill(1);
    // A few horizontal/vertical dark rules on white, like a blank form.
    const lines = 2 + rng.nextInt(4);
    for (let l = 0; l < lines; l++) {
      const y = rng.nextInt(side);
      for (let x = 0; x < side; x++) {
        const at = (y * side + x) * 3;
        data[at] = 0.1;
        data[at + 1] = 0.1;
        data[at + 2] = 0.1;
      }
      const x = rng.nextInt(side);
      for (let y2 = 0; y2 < side; y2++) {
        const at = (y2 * side + x) * 3;
        data[at] = 0.2;
        data[at + 1] = 0.2;
        data[at + 2] = 0.2;
      }
    }
    const stem = `form${String(i).padStart(3, "0")}`;
    writeRgbPng(path.join(dir, `${stem}.png`), { width: side, height: side, data });
    stems.push(stem);
  }
  return stems;
}
