/**
 * Mention embedding extraction.
 *
 * For every mention the encoder input is the mention's sentence with the
 * trigger appended after a [SEP] marker (the appended copy only signals
 * which predicate is in focus). The mention vector is the mean of the
 * final-layer vectors of the trigger's wordpieces at their original
 * in-sentence positions.
 */

import * as fs from "fs";

import { Corpus, Document, EventMention, triggerTokens } from "./corpus";
import { Encoder } from "./encoder";
import { SEP_TOKEN, WordPieceTokenizer } from "./wordpiece";

export interface ExtractionConfig {
  encoder: Encoder;
  tokenizer: WordPieceTokenizer;
  /** Maximum wordpiece count per input; longer inputs are truncated. */
  maxLen?: number;
  log?: (message: string) => void;
}

export interface MentionExtraction {
  mentionId: string;
  vector: Float32Array;
  /** Piece indices that were pooled (positions in the encoder input). */
  pooledPieceIndices: number[];
  /** Number of pieces that came from the (possibly truncated) sentence. */
  sentencePieceCount: number;
  truncated: boolean;
}

interface MarkedWord {
  text: string;
  /** Original token index within the sentence; -1 for [SEP] and the copy. */
  sentenceIndex: number;
}

export class ExtractionError extends Error {}

/** Sentence + [SEP] + trigger copy, each word tagged with its origin. */
function markedInput(doc: Document, mention: EventMention): MarkedWord[] {
  const sentence = doc.sentences[mention.sentIdx];
  const trigger = triggerTokens(doc, mention);
  if (trigger.length === 0) {
    throw new ExtractionError(
      `mention '${mention.mentionId}': empty trigger span`,
    );
  }
  const words: MarkedWord[] = sentence.map((text, sentenceIndex) => ({
    text,
    sentenceIndex,
  }));
  words.push({ text: SEP_TOKEN, sentenceIndex: -1 });
  for (const text of trigger) {
    words.push({ text, sentenceIndex: -1 });
  }
  return words;
}

/**
 * Drop sentence words from the end farthest from the trigger until the
 * piece budget holds. Trigger words, the separator and the appended copy
 * are never dropped.
 */
function truncateToBudget(
  words: MarkedWord[],
  mention: EventMention,
  tokenizer: WordPieceTokenizer,
  maxLen: number,
): { words: MarkedWord[]; truncated: boolean } {
  const pieceCount = (list: MarkedWord[]) =>
    list.reduce((n, w) => n + tokenizer.tokenizeWord(w.text).length, 0);
  let current = words.slice();
  let truncated = false;
  while (pieceCount(current) > maxLen) {
    const sentenceWords = current.filter((w) => w.sentenceIndex >= 0);
    const removable = sentenceWords.filter(
      (w) =>
        w.sentenceIndex < mention.tokStart || w.sentenceIndex >= mention.tokEnd,
    );
    if (removable.length === 0) break; // nothing left but the trigger
    const first = sentenceWords[0].sentenceIndex;
    const last = sentenceWords[sentenceWords.length - 1].sentenceIndex;
    // distance from each end to the trigger span decides which side goes
    const headGap = mention.tokStart - first;
    const tailGap = last - (mention.tokEnd - 1);
    const dropIndex = headGap >= tailGap ? first : last;
    current = current.filter(
      (w) => !(w.sentenceIndex === dropIndex),
    );
    truncated = true;
  }
  return { words: current, truncated };
}

export function extractMention(
  doc: Document,
  mention: EventMention,
  config: ExtractionConfig,
): MentionExtraction {
  const { encoder, tokenizer } = config;
  let words = markedInput(doc, mention);
  let truncated = false;
  if (config.maxLen !== undefined) {
    const result = truncateToBudget(words, mention, tokenizer, config.maxLen);
    words = result.words;
    truncated = result.truncated;
    if (truncated && config.log) {
      config.log(
        `mention '${mention.mentionId}': sentence truncated to fit ` +
          `${config.maxLen} pieces`,
      );
    }
  }
  const aligned = tokenizer.tokenize(words.map((w) => w.text));
  const vectors = encoder.encode(aligned.map((p) => p.piece));

  const pooledPieceIndices: number[] = [];
  let sentencePieceCount = 0;
  aligned.forEach((piece, pieceIndex) => {
    const word = words[piece.wordIndex];
    if (word.sentenceIndex >= 0) sentencePieceCount += 1;
    if (
      word.sentenceIndex >= mention.tokStart &&
      word.sentenceIndex < mention.tokEnd
    ) {
      pooledPieceIndices.push(pieceIndex);
    }
  });
  if (pooledPieceIndices.length === 0) {
    throw new ExtractionError(
      `mention '${mention.mentionId}': trigger produced no pieces`,
    );
  }

  const vector = meanPool(vectors, pooledPieceIndices, encoder.dim);
  return {
    mentionId: mention.mentionId,
    vector,
    pooledPieceIndices,
    sentencePieceCount,
    truncated,
  };
}

export function meanPool(
  vectors: Float32Array[],
  indices: number[],
  dim: number,
): Float32Array {
  const sum = new Float64Array(dim);
  for (const index of indices) {
    const row = vectors[index];
    for (let d = 0; d < dim; d += 1) sum[d] += row[d];
  }
  const out = new Float32Array(dim);
  for (let d = 0; d < dim; d += 1) {
    out[d] = Math.fround(sum[d] / indices.length);
  }
  return out;
}

export interface ExtractionRun {
  records: MentionExtraction[];
  truncatedCount: number;
}

export function extractCorpus(
  corpus: Corpus,
  config: ExtractionConfig,
): ExtractionRun {
  const records: MentionExtraction[] = [];
  let truncatedCount = 0;
  for (const doc of corpus.documents) {
    for (const mention of doc.mentions) {
      const extraction = extractMention(doc, mention, config);
      if (extraction.truncated) truncatedCount += 1;
      records.push(extraction);
    }
  }
  return { records, truncatedCount };
}

/**
 * Write the embedding file format consumed by the core pipeline: a header
 * line carrying the dimension and encoder name, then one record per
 * mention in corpus order. Float32 components serialize losslessly.
 */
export function writeEmbeddingFile(
  run: ExtractionRun,
  encoderName: string,
  dim: number,
  path: string,
): void {
  const lines: string[] = [];
  lines.push(
    JSON.stringify({
      format: "evlink-emb",
      version: 1,
      dim,
      encoder: encoderName,
    }),
  );
  for (const record of run.records) {
    lines.push(
      JSON.stringify({
        mention_id: record.mentionId,
        vector: Array.from(record.vector),
      }),
    );
  }
  fs.writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}
