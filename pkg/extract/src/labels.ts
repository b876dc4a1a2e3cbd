import * as fs from "node:fs";

import { atomicWriteFile } from "./femb.js";

/**
 * Label table interchange: CSV with header `id,label_index,label_name`,
 * indices covering 0..K-1 with K >= 2 and every class holding at least two
 * members — the constraints the evaluation side enforces on load.
 */

export interface LabelRow {
  id: string;
  labelIndex: number;
  labelName: string;
}

export class LabelError extends Error {}

function csvField(value: string): string {
  if (/[",\n\r]/.test(value)) {
    return `"${value.replaceAll('"', '""')}"`;
  }
  return value;
}

export function validateLabels(rows: LabelRow[]): void {
  if (rows.length === 0) {
    throw new LabelError("label table is empty");
  }
  const ids = new Set<string>();
  const counts = new Map<number, number>();
  const names = new Map<number, string>();
  for (const row of rows) {
    if (ids.has(row.id)) {
      throw new LabelError(`duplicate id ${JSON.stringify(row.id)}`);
    }
    ids.add(row.id);
    if (!Number.isInteger(row.labelIndex) || row.labelIndex < 0) {
      throw new LabelError(`label index must be a non-negative integer, got ${row.labelIndex}`);
    }
    const known = names.get(row.labelIndex);
    if (known !== undefined && known !== row.labelName) {
      throw new LabelError(
        `label index ${row.labelIndex} maps to both ${JSON.stringify(known)} and ${JSON.stringify(row.labelName)}`,
      );
    }
    names.set(row.labelIndex, row.labelName);
    counts.set(row.labelIndex, (counts.get(row.labelIndex) ?? 0) + 1);
  }
  const k = counts.size;
  if (k < 2) {
    throw new LabelError("need at least 2 classes");
  }
  for (let c = 0; c < k; c++) {
    const count = counts.get(c);
    if (count === undefined) {
      throw new LabelError(`label indices must cover 0..${k - 1}, missing ${c}`);
    }
    if (count < 2) {
      throw new LabelError(`class ${c} has ${count} member(s), need at least 2`);
    }
  }
}

export function saveLabels(filePath: string, rows: LabelRow[]): void {
  validateLabels(rows);
  const lines = ["id,label_index,label_name"];
  for (const row of rows) {
    lines.push(`${csvField(row.id)},${row.labelIndex},${csvField(row.labelName)}`);
  }
  atomicWriteFile(filePath, lines.join("\n") + "\n");
}

function parseCsvLine(line: string): string[] {
  const fields: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i]!;
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          current += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch === '"' && current === "") {
      quoted = true;
    } else if (ch === ",") {
      fields.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  fields.push(current);
  return fields;
}

export function loadLabels(filePath: string): LabelRow[] {
  const text = fs.readFileSync(filePath, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || lines[0] !== "id,label_index,label_name") {
    throw new LabelError("expected header id,label_index,label_name");
  }
  const rows: LabelRow[] = [];
  for (const line of lines.slice(1)) {
    const fields = parseCsvLine(line);
    if (fields.length !== 3) {
      throw new LabelError(`expected 3 fields, got ${fields.length}: ${line}`);
    }
    const index = Number(fields[1]);
    if (!Number.isInteger(index)) {
      throw new LabelError(`bad label index ${JSON.stringify(fields[1])}`);
    }
    rows.push({ id: fields[0]!, labelIndex: index, labelName: fields[2]! });
  }
  validateLabels(rows);
  return rows;
}
