import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { afterAll, describe, expect, it } from "vitest";

import {
  compareEncoders,
  formatTable,
  runCoreDiagnostics,
} from "../src/diagnostics";

const tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "evlink-diag-"));
afterAll(() => fs.rmSync(tmpDir, { recursive: true, force: true }));

/** Two documents, each one two-mention chain plus a singleton. */
function writeCorpus(name: string): string {
  const documents = [0, 1].map((d) => ({
    doc_id: `${name}_d${d}`,
    sentences: [["x"], ["x"], ["x"]],
    mentions: [0, 1, 2].map((m) => ({
      mention_id: `${name}_d${d}_m${m}`,
      sent_idx: m,
      tok_start: 0,
      tok_end: 1,
      event_type: null,
      head_lemma: null,
      chain_id: m < 2 ? `${name}_d${d}_c` : null,
    })),
  }));
  const file = path.join(tmpDir, `${name}.corpus.json`);
  fs.writeFileSync(file, JSON.stringify({ documents }));
  return file;
}

/** Coreferent mentions share a direction; others are orthogonal. */
function writeSeparatedEmbeddings(name: string, corpusName: string): string {
  const lines = [JSON.stringify({ format: "evlink-emb", version: 1, dim: 4 })];
  for (const d of [0, 1]) {
    const chainDir = d === 0 ? [1, 0, 0, 0] : [0, 1, 0, 0];
    const singletonDir = d === 0 ? [0, 0, 1, 0] : [0, 0, 0, 1];
    for (const m of [0, 1, 2]) {
      const vector = m < 2 ? chainDir : singletonDir;
      lines.push(
        JSON.stringify({
          mention_id: `${corpusName}_d${d}_m${m}`,
          vector,
        }),
      );
    }
  }
  const file = path.join(tmpDir, `${name}.emb.jsonl`);
  fs.writeFileSync(file, lines.join("\n") + "\n");
  return file;
}

/** Every mention gets the same vector: zero separation. */
function writeFlatEmbeddings(name: string, corpusName: string): string {
  const lines = [JSON.stringify({ format: "evlink-emb", version: 1, dim: 4 })];
  for (const d of [0, 1]) {
    for (const m of [0, 1, 2]) {
      lines.push(
        JSON.stringify({
          mention_id: `${corpusName}_d${d}_m${m}`,
          vector: [0.5, 0.5, 0.5, 0.5],
        }),
      );
    }
  }
  const file = path.join(tmpDir, `${name}.emb.jsonl`);
  fs.writeFileSync(file, lines.join("\n") + "\n");
  return file;
}

describe("runCoreDiagnostics", () => {
  it("parses the core pipeline's triple", () => {
    const corpus = writeCorpus("one");
    const good = writeSeparatedEmbeddings("one_good", "one");
    const triple = runCoreDiagnostics(corpus, good);
    expect(triple.cosPlus).toBeCloseTo(1.0, 6);
    expect(triple.cosMinus).toBeCloseTo(0.0, 6);
    expect(triple.cosDelta).toBeCloseTo(1.0, 6);
    expect(triple.nPositive).toBe(2);
    expect(triple.nNegative).toBe(4);
  });
});

describe("compareEncoders", () => {
  it("ranks by separation and repeats 3 values per dataset", () => {
    const corpusA = writeCorpus("setA");
    const corpusB = writeCorpus("setB");
    const manifest = {
      datasets: [
        { name: "setA", corpus: corpusA },
        { name: "setB", corpus: corpusB },
      ],
      embeddings: {
        flat: {
          setA: writeFlatEmbeddings("a_flat", "setA"),
          setB: writeFlatEmbeddings("b_flat", "setB"),
        },
        separated: {
          setA: writeSeparatedEmbeddings("a_good", "setA"),
          setB: writeSeparatedEmbeddings("b_good", "setB"),
        },
      },
    };
    const table = compareEncoders(manifest);
    // flat encoder has cos_delta 0: ranked last
    expect(table.rows.map((r) => r.encoder)).toEqual(["separated", "flat"]);
    expect(table.datasets).toEqual(["setA", "setB"]);
    for (const row of table.rows) {
      for (const dataset of table.datasets) {
        const triple = row.byDataset[dataset];
        expect(triple).toBeDefined();
        expect(triple.cosDelta).not.toBeNull();
      }
    }
    const flat = table.rows[1].byDataset.setA;
    expect(flat.cosDelta).toBeCloseTo(0.0, 9);

    const text = formatTable(table);
    const lines = text.split("\n");
    // header + divider + one row per encoder
    expect(lines).toHaveLength(4);
    expect(lines[0]).toContain("setA");
    expect(lines[0]).toContain("setB");
    // three values per dataset cell, separated by slashes
    const dataRow = lines[2];
    expect((dataRow.match(/\//g) ?? []).length).toBe(4); // 2 per cell x 2
    expect(dataRow.startsWith("separated")).toBe(true);
  });

  it("identical file compared against itself yields identical rows", () => {
    const corpus = writeCorpus("same");
    const file = writeSeparatedEmbeddings("same_good", "same");
    const manifest = {
      datasets: [{ name: "dev", corpus }],
      embeddings: { first: { dev: file }, second: { dev: file } },
    };
    const table = compareEncoders(manifest);
    expect(table.rows[0].byDataset.dev).toEqual(
      table.rows[1].byDataset.dev,
    );
  });
});
