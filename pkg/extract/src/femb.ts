import { randomBytes } from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

/**
 * Binary embedding interchange: a 64-byte header (magic FEMB, u16 version,
 * u16 reserved, u64 row count, u64 column count, zero padding), the float32
 * little-endian row-major matrix, then one newline-terminated UTF-8 id per
 * row. Byte layout must stay exactly compatible with the evaluation side.
 */

export const FEMB_MAGIC = "FEMB";
export const FEMB_VERSION = 1;
export const FEMB_HEADER_BYTES = 64;

export interface EmbeddingSet {
  ids: string[];
  /** Row-major [rows x dim]. */
  matrix: Float32Array;
  dim: number;
}

export class FembError extends Error {}

function checkShape(set: EmbeddingSet): void {
  const rows = set.ids.length;
  if (!Number.isInteger(set.dim) || set.dim <= 0) {
    throw new FembError(`embedding dim must be a positive integer, got ${set.dim}`);
  }
  if (set.matrix.length !== rows * set.dim) {
    throw new FembError(
      `matrix has ${set.matrix.length} values, expected ${rows} rows x ${set.dim}`,
    );
  }
  const seen = new Set<string>();
  for (const id of set.ids) {
    if (id.length === 0 || id.includes("\n")) {
      throw new FembError(`invalid id ${JSON.stringify(id)}`);
    }
    if (seen.has(id)) {
      throw new FembError(`duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
  }
  for (let i = 0; i < set.matrix.length; i++) {
    if (!Number.isFinite(set.matrix[i]!)) {
      throw new FembError(`non-finite value in row ${Math.floor(i / set.dim)}`);
    }
  }
}

export function encodeFemb(set: EmbeddingSet): Buffer {
  checkShape(set);
  const rows = set.ids.length;
  const header = Buffer.alloc(FEMB_HEADER_BYTES);
  header.write(FEMB_MAGIC, 0, "ascii");
  header.writeUInt16LE(FEMB_VERSION, 4);
  header.writeUInt16LE(0, 6);
  header.writeBigUInt64LE(BigInt(rows), 8);
  header.writeBigUInt64LE(BigInt(set.dim), 16);
  const matrix = Buffer.from(set.matrix.buffer.slice(set.matrix.byteOffset, set.matrix.byteOffset + set.matrix.byteLength));
  const ids = Buffer.from(set.ids.map((id) => id + "\n").join(""), "utf8");
  return Buffer.concat([header, matrix, ids]);
}

export function decodeFemb(raw: Buffer): EmbeddingSet {
  if (raw.length < FEMB_HEADER_BYTES) {
    throw new FembError("file shorter than the 64-byte header");
  }
  if (raw.toString("ascii", 0, 4) !== FEMB_MAGIC) {
    throw new FembError("bad magic, not an embedding file");
  }
  const version = raw.readUInt16LE(4);
  if (version !== FEMB_VERSION) {
    throw new FembError(`unsupported version ${version}`);
  }
  const rows = Number(raw.readBigUInt64LE(8));
  const dim = Number(raw.readBigUInt64LE(16));
  const matrixBytes = rows * dim * 4;
  if (raw.length < FEMB_HEADER_BYTES + matrixBytes) {
    throw new FembError("file truncated inside the matrix");
  }
  const matrix = new Float32Array(rows * dim);
  for (let i = 0; i < matrix.length; i++) {
    matrix[i] = raw.readFloatLE(FEMB_HEADER_BYTES + i * 4);
  }
  const tail = raw.toString("utf8", FEMB_HEADER_BYTES + matrixBytes);
  const lines = tail.split("\n");
  if (lines.pop() !== "") {
    throw new FembError("id block must end with a newline");
  }
  if (lines.length !== rows) {
    throw new FembError(`expected ${rows} ids, found ${lines.length}`);
  }
  const set = { ids: lines, matrix, dim };
  checkShape(set);
  return set;
}

/** Write via a temp file and rename so readers never observe a partial file. */
export function atomicWriteFile(filePath: string, data: Buffer | string): void {
  const dir = path.dirname(filePath);
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.${path.basename(filePath)}.${randomBytes(6).toString("hex")}.tmp`);
  fs.writeFileSync(tmp, data);
  try {
    fs.renameSync(tmp, filePath);
  } catch (err) {
    fs.rmSync(tmp, { force: true });
    throw err;
  }
}

export function saveFemb(filePath: string, set: EmbeddingSet): void {
  atomicWriteFile(filePath, encodeFemb(set));
}

export function loadFemb(filePath: string): EmbeddingSet {
  return decodeFemb(fs.readFileSync(filePath));
}
