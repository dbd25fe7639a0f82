/**
 * Reader for the corpus interchange format shared with the core pipeline:
 * one JSON document holding documents with sentence token lists and event
 * mentions (trigger spans). Unknown fields are ignored.
 */

import * as fs from "fs";

export interface EventMention {
  mentionId: string;
  docId: string;
  sentIdx: number;
  tokStart: number;
  tokEnd: number; // exclusive
  eventType: string | null;
  headLemma: string | null;
  chainId: string | null;
}

export interface Document {
  docId: string;
  sentences: string[][];
  mentions: EventMention[];
}

export interface Corpus {
  documents: Document[];
}

export class CorpusFormatError extends Error {}

function asOptionalString(value: unknown, context: string): string | null {
  if (value === undefined || value === null) return null;
  if (typeof value !== "string") {
    throw new CorpusFormatError(`${context}: expected string or null`);
  }
  return value;
}

function asInt(value: unknown, context: string): number {
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new CorpusFormatError(`${context}: expected an integer`);
  }
  return value;
}

export function parseCorpus(raw: unknown): Corpus {
  if (typeof raw !== "object" || raw === null || !("documents" in raw)) {
    throw new CorpusFormatError("corpus: missing 'documents'");
  }
  const documentsRaw = (raw as { documents: unknown }).documents;
  if (!Array.isArray(documentsRaw)) {
    throw new CorpusFormatError("corpus: 'documents' must be a list");
  }
  const documents: Document[] = [];
  for (const docRaw of documentsRaw) {
    const docId = (docRaw as { doc_id?: unknown }).doc_id;
    if (typeof docId !== "string") {
      throw new CorpusFormatError("document without a doc_id");
    }
    const sentences = (docRaw as { sentences?: unknown }).sentences;
    if (!Array.isArray(sentences) || sentences.some((s) => !Array.isArray(s))) {
      throw new CorpusFormatError(`document '${docId}': bad 'sentences'`);
    }
    const mentionsRaw = (docRaw as { mentions?: unknown }).mentions;
    if (!Array.isArray(mentionsRaw)) {
      throw new CorpusFormatError(`document '${docId}': bad 'mentions'`);
    }
    const mentions: EventMention[] = [];
    for (const m of mentionsRaw) {
      const rec = m as Record<string, unknown>;
      const mentionId = rec.mention_id;
      if (typeof mentionId !== "string") {
        throw new CorpusFormatError(
          `document '${docId}': mention without mention_id`,
        );
      }
      const where = `mention '${mentionId}'`;
      const mention: EventMention = {
        mentionId,
        docId,
        sentIdx: asInt(rec.sent_idx, `${where}: sent_idx`),
        tokStart: asInt(rec.tok_start, `${where}: tok_start`),
        tokEnd: asInt(rec.tok_end, `${where}: tok_end`),
        eventType: asOptionalString(rec.event_type, `${where}: event_type`),
        headLemma: asOptionalString(rec.head_lemma, `${where}: head_lemma`),
        chainId: asOptionalString(rec.chain_id, `${where}: chain_id`),
      };
      const sentence = (sentences as string[][])[mention.sentIdx];
      if (sentence === undefined) {
        throw new CorpusFormatError(`${where}: sent_idx out of range`);
      }
      if (
        mention.tokStart < 0 ||
        mention.tokStart >= mention.tokEnd ||
        mention.tokEnd > sentence.length
      ) {
        throw new CorpusFormatError(`${where}: bad trigger span`);
      }
      mentions.push(mention);
    }
    documents.push({ docId, sentences: sentences as string[][], mentions });
  }
  return { documents };
}

export function loadCorpus(path: string): Corpus {
  const text = fs.readFileSync(path, "utf-8");
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new CorpusFormatError(`${path}: ${(err as Error).message}`);
  }
  return parseCorpus(raw);
}

export function triggerTokens(doc: Document, mention: EventMention): string[] {
  return doc.sentences[mention.sentIdx].slice(mention.tokStart, mention.tokEnd);
}
