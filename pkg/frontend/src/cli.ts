#!/usr/bin/env node
/**
 * evlink-extract: embedding files and encoder diagnostics for the event
 * coreference pipeline.
 *
 *   evlink-extract --corpus c.json --encoder ctxhash-large --out e.jsonl
 *   evlink-extract diagnostics --manifest compare.json
 */

import * as fs from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadCorpus } from "./corpus";
import { encoderByName } from "./encoder";
import { extractCorpus, writeEmbeddingFile } from "./extract";
import {
  compareEncoders,
  formatTable,
  loadManifest,
  runCoreDiagnostics,
} from "./diagnostics";
import { lemmatize } from "./lemma";
import { WordPieceTokenizer, characterVocabulary } from "./wordpiece";

interface ExtractArgs {
  corpus: string;
  encoder: string;
  out: string;
  maxLen?: number;
  lemmas: boolean;
  vocab?: string;
}

function runExtract(args: ExtractArgs): void {
  const corpus = loadCorpus(args.corpus);
  const encoder = encoderByName(args.encoder);
  const vocab = args.vocab
    ? (JSON.parse(fs.readFileSync(args.vocab, "utf-8")) as Record<
        string,
        number
      >)
    : characterVocabulary();
  const tokenizer = new WordPieceTokenizer({ vocab });
  const run = extractCorpus(corpus, {
    encoder,
    tokenizer,
    maxLen: args.maxLen,
    log: (message) => console.error(message),
  });
  writeEmbeddingFile(run, encoder.name, encoder.dim, args.out);
  const total = run.records.length;
  console.log(
    `wrote ${total} vectors (dim ${encoder.dim}, encoder ${encoder.name})` +
      ` to ${args.out}` +
      (run.truncatedCount ? `; ${run.truncatedCount} truncated` : ""),
  );
  if (args.lemmas) {
    const withLemmas = JSON.parse(fs.readFileSync(args.corpus, "utf-8"));
    for (const doc of withLemmas.documents) {
      for (const mention of doc.mentions) {
        const sentence = doc.sentences[mention.sent_idx];
        const head = sentence[mention.tok_end - 1];
        mention.head_lemma = lemmatize(head);
      }
    }
    fs.writeFileSync(
      args.corpus,
      JSON.stringify(withLemmas, null, 1) + "\n",
      "utf-8",
    );
    console.log(`populated head_lemma fields in ${args.corpus}`);
  }
}

export function main(argv: string[]): number {
  let failed = false;
  yargs(argv)
    .scriptName("evlink-extract")
    .command(
      "$0",
      "extract mention embeddings from a corpus",
      (y) =>
        y
          .option("corpus", { type: "string", demandOption: true })
          .option("encoder", { type: "string", demandOption: true })
          .option("out", { type: "string", demandOption: true })
          .option("max-len", { type: "number" })
          .option("lemmas", {
            type: "boolean",
            default: false,
            describe: "also write head_lemma fields back into the corpus",
          })
          .option("vocab", {
            type: "string",
            describe: "wordpiece vocabulary JSON (token -> id)",
          }),
      (args) => {
        runExtract({
          corpus: args.corpus,
          encoder: args.encoder,
          out: args.out,
          maxLen: args["max-len"],
          lemmas: args.lemmas,
          vocab: args.vocab,
        });
      },
    )
    .command(
      "diagnostics",
      "compare encoders by cosine separation on labeled data",
      (y) =>
        y
          .option("manifest", {
            type: "string",
            describe: "JSON: {datasets: [{name, corpus}], embeddings: " +
              "{encoder: {dataset: path}}}",
          })
          .option("corpus", { type: "string" })
          .option("emb", {
            type: "array",
            string: true,
            describe: "name=path, repeatable (single-dataset shortcut)",
          })
          .option("core-command", { type: "string", default: "evlink" })
          .option("json", { type: "boolean", default: false }),
      (args) => {
        let manifest;
        if (args.manifest) {
          manifest = loadManifest(args.manifest);
        } else if (args.corpus && args.emb) {
          const embeddings: Record<string, Record<string, string>> = {};
          for (const spec of args.emb as string[]) {
            const idx = spec.indexOf("=");
            if (idx < 1) throw new Error(`--emb expects name=path: ${spec}`);
            embeddings[spec.slice(0, idx)] = { dev: spec.slice(idx + 1) };
          }
          manifest = {
            datasets: [{ name: "dev", corpus: args.corpus }],
            embeddings,
          };
        } else {
          throw new Error("need --manifest or --corpus with --emb");
        }
        const table = compareEncoders(manifest, args["core-command"]);
        if (args.json) {
          console.log(JSON.stringify(table, null, 1));
        } else {
          console.log(formatTable(table));
        }
      },
    )
    .command(
      "check",
      "run core diagnostics for one embedding file",
      (y) =>
        y
          .option("corpus", { type: "string", demandOption: true })
          .option("embeddings", { type: "string", demandOption: true })
          .option("core-command", { type: "string", default: "evlink" }),
      (args) => {
        const triple = runCoreDiagnostics(
          args.corpus,
          args.embeddings,
          args["core-command"],
        );
        console.log(JSON.stringify(triple, null, 1));
      },
    )
    .strict()
    .fail((message, error) => {
      console.error(`error: ${message ?? error?.message}`);
      failed = true;
    })
    .parseSync();
  return failed ? 1 : 0;
}

if (require.main === module) {
  try {
    process.exitCode = main(hideBin(process.argv));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exitCode = 1;
  }
}
