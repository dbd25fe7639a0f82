/**
 * Encoder comparison: cosine separation diagnostics per embedding file.
 *
 * The arithmetic lives in the core pipeline; this module shells out to its
 * `evlink diagnostics` command per (dataset, embedding file), collects the
 * cos+/cos-/cos-delta triples, and renders the comparison grid sorted by
 * separation, best encoder first.
 */

import { execFileSync } from "child_process";
import * as fs from "fs";

export interface DiagnosticsTriple {
  cosPlus: number | null;
  cosMinus: number | null;
  cosDelta: number | null;
  nPositive: number;
  nNegative: number;
}

export interface DatasetSpec {
  name: string;
  corpus: string;
}

export interface EncoderRow {
  encoder: string;
  /** dataset name -> triple */
  byDataset: Record<string, DiagnosticsTriple>;
}

export interface ComparisonTable {
  datasets: string[];
  rows: EncoderRow[];
}

export interface DiagnosticsManifest {
  datasets: DatasetSpec[];
  /** encoder name -> (dataset name -> embedding file path) */
  embeddings: Record<string, Record<string, string>>;
}

export class DiagnosticsError extends Error {}

/** One core-pipeline diagnostics call. */
export function runCoreDiagnostics(
  corpusPath: string,
  embeddingsPath: string,
  coreCommand = "evlink",
): DiagnosticsTriple {
  let stdout: string;
  try {
    stdout = execFileSync(
      coreCommand,
      ["diagnostics", "--corpus", corpusPath, "--embeddings", embeddingsPath],
      { encoding: "utf-8" },
    );
  } catch (err) {
    const detail = (err as { stderr?: string }).stderr ?? String(err);
    throw new DiagnosticsError(
      `core diagnostics failed for ${embeddingsPath}: ${detail.trim()}`,
    );
  }
  const raw = JSON.parse(stdout) as Record<string, unknown>;
  return {
    cosPlus: (raw.cos_plus as number | null) ?? null,
    cosMinus: (raw.cos_minus as number | null) ?? null,
    cosDelta: (raw.cos_delta as number | null) ?? null,
    nPositive: raw.n_positive as number,
    nNegative: raw.n_negative as number,
  };
}

function meanDelta(row: EncoderRow, datasets: string[]): number {
  const deltas = datasets
    .map((d) => row.byDataset[d]?.cosDelta)
    .filter((v): v is number => typeof v === "number");
  if (deltas.length === 0) return Number.NEGATIVE_INFINITY;
  return deltas.reduce((a, b) => a + b, 0) / deltas.length;
}

export function compareEncoders(
  manifest: DiagnosticsManifest,
  coreCommand = "evlink",
): ComparisonTable {
  const datasets = manifest.datasets.map((d) => d.name);
  const rows: EncoderRow[] = [];
  for (const [encoder, files] of Object.entries(manifest.embeddings)) {
    const byDataset: Record<string, DiagnosticsTriple> = {};
    for (const dataset of manifest.datasets) {
      const file = files[dataset.name];
      if (!file) {
        throw new DiagnosticsError(
          `encoder '${encoder}' has no embedding file for dataset ` +
            `'${dataset.name}'`,
        );
      }
      byDataset[dataset.name] = runCoreDiagnostics(
        dataset.corpus,
        file,
        coreCommand,
      );
    }
    rows.push({ encoder, byDataset });
  }
  rows.sort((a, b) => meanDelta(b, datasets) - meanDelta(a, datasets));
  return { datasets, rows };
}

export function loadManifest(path: string): DiagnosticsManifest {
  const raw = JSON.parse(fs.readFileSync(path, "utf-8")) as Record<
    string,
    unknown
  >;
  if (!Array.isArray(raw.datasets) || typeof raw.embeddings !== "object") {
    throw new DiagnosticsError(
      `${path}: manifest needs 'datasets' and 'embeddings'`,
    );
  }
  return raw as unknown as DiagnosticsManifest;
}

function formatValue(value: number | null): string {
  return value === null ? "  -  " : value.toFixed(2);
}

/**
 * Render the grid: one row per encoder, one three-value cell
 * (cos+ / cos- / cos-delta) per dataset.
 */
export function formatTable(table: ComparisonTable): string {
  const nameWidth = Math.max(
    7,
    ...table.rows.map((r) => r.encoder.length),
  );
  const cellWidth = 20;
  const header =
    "encoder".padEnd(nameWidth) +
    table.datasets
      .map((d) => ` | ${(d + " (cos+/cos-/cosD)").padEnd(cellWidth)}`)
      .join("");
  const divider = "-".repeat(header.length);
  const lines = [header, divider];
  for (const row of table.rows) {
    const cells = table.datasets.map((dataset) => {
      const t = row.byDataset[dataset];
      const cell = `${formatValue(t.cosPlus)} / ${formatValue(
        t.cosMinus,
      )} / ${formatValue(t.cosDelta)}`;
      return ` | ${cell.padEnd(cellWidth)}`;
    });
    lines.push(row.encoder.padEnd(nameWidth) + cells.join(""));
  }
  return lines.join("\n");
}
