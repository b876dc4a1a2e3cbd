import * as fs from "node:fs";

import * as tf from "@tensorflow/tfjs";

import { atomicWriteFile } from "./femb.js";
import { Prng, deriveSeed } from "./prng.js";

/**
 * Named trainable tensors with deterministic initialization and a
 * self-contained checkpoint format (this format never crosses the component
 * boundary; only embedding files and mask PNGs do).
 */

const CKPT_MAGIC = "FXW1";

export class CheckpointError extends Error {}

let storeCounter = 0;

export class WeightStore {
  private entries = new Map<string, tf.Variable>();
  // The engine requires globally unique variable names, so two live stores
  // must not hand it the same logical name.
  private readonly engineTag = `s${storeCounter++}`;

  constructor(private readonly seed: bigint | number) {}

  /** Create a gaussian-initialized variable; the seed depends only on the name. */
  gaussian(name: string, shape: number[], scale: number): tf.Variable {
    return this.fromArray(name, shape, (size) =>
      new Prng(deriveSeed(this.seed, `init:${name}`)).gaussianArray(size, scale),
    );
  }

  constant(name: string, shape: number[], value: number): tf.Variable {
    return this.fromArray(name, shape, (size) => new Float32Array(size).fill(value));
  }

  private fromArray(
    name: string,
    shape: number[],
    build: (size: number) => Float32Array,
  ): tf.Variable {
    const existing = this.entries.get(name);
    if (existing !== undefined) {
      return existing;
    }
    const size = shape.reduce((a, b) => a * b, 1);
    const variable = tf.variable(tf.tensor(build(size), shape), true, `${this.engineTag}/${name}`);
    this.entries.set(name, variable);
    return variable;
  }

  get(name: string): tf.Variable {
    const variable = this.entries.get(name);
    if (variable === undefined) {
      throw new CheckpointError(`no weight named ${JSON.stringify(name)}`);
    }
    return variable;
  }

  list(): tf.Variable[] {
    return [...this.entries.values()];
  }

  names(): string[] {
    return [...this.entries.keys()];
  }

  dispose(): void {
    for (const variable of this.entries.values()) variable.dispose();
    this.entries.clear();
  }

  /** Serialize every weight: u32 header length, JSON header, float32 data. */
  save(filePath: string): void {
    const header = {
      magic: CKPT_MAGIC,
      entries: [...this.entries.entries()].map(([name, variable]) => ({
        name,
        shape: variable.shape,
      })),
    };
    const headerBytes = Buffer.from(JSON.stringify(header), "utf8");
    const prefix = Buffer.alloc(4);
    prefix.writeUInt32LE(headerBytes.length, 0);
    const blocks: Buffer[] = [prefix, headerBytes];
    for (const [, variable] of this.entries) {
      const data = variable.dataSync() as Float32Array;
      blocks.push(Buffer.from(data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength)));
    }
    atomicWriteFile(filePath, Buffer.concat(blocks));
  }

  /**
   * Overwrite variables from a checkpoint. Without options, names and shapes
   * must match exactly. With `onlyPrefix`, only checkpoint weights under that
   * prefix are loaded (the rest are skipped) and every model weight under the
   * prefix must be covered.
   */
  restore(filePath: string, options: { onlyPrefix?: string } = {}): void {
    const raw = fs.readFileSync(filePath);
    if (raw.length < 4) {
      throw new CheckpointError("checkpoint shorter than its header length field");
    }
    const headerLength = raw.readUInt32LE(0);
    if (raw.length < 4 + headerLength) {
      throw new CheckpointError("checkpoint truncated inside the header");
    }
    let header: { magic?: string; entries?: { name: string; shape: number[] }[] };
    try {
      header = JSON.parse(raw.toString("utf8", 4, 4 + headerLength));
    } catch {
      throw new CheckpointError("checkpoint header is not valid JSON");
    }
    if (header.magic !== CKPT_MAGIC || !Array.isArray(header.entries)) {
      throw new CheckpointError("not a weight checkpoint");
    }
    const prefix = options.onlyPrefix;
    const wanted = (name: string) => prefix === undefined || name.startsWith(prefix);
    const assigned = new Set<string>();
    let offset = 4 + headerLength;
    for (const entry of header.entries) {
      const size = entry.shape.reduce((a, b) => a * b, 1);
      const byteLength = size * 4;
      if (raw.length < offset + byteLength) {
        throw new CheckpointError("checkpoint truncated inside the weight data");
      }
      if (wanted(entry.name)) {
        const variable = this.entries.get(entry.name);
        if (variable === undefined) {
          throw new CheckpointError(`unexpected weight ${JSON.stringify(entry.name)}`);
        }
        if (variable.shape.length !== entry.shape.length ||
            variable.shape.some((dim, axis) => dim !== entry.shape[axis])) {
          throw new CheckpointError(
            `shape mismatch for ${entry.name}: checkpoint ${entry.shape}, model ${variable.shape}`,
          );
        }
        const data = new Float32Array(size);
        for (let i = 0; i < size; i++) data[i] = raw.readFloatLE(offset + i * 4);
        variable.assign(tf.tensor(data, entry.shape));
        assigned.add(entry.name);
      }
      offset += byteLength;
    }
    if (offset !== raw.length) {
      throw new CheckpointError("checkpoint has trailing bytes");
    }
    for (const name of this.entries.keys()) {
      if (wanted(name) && !assigned.has(name)) {
        throw new CheckpointError(`checkpoint is missing weight ${JSON.stringify(name)}`);
      }
    }
  }
}
