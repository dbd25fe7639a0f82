export { loadCorpus, parseCorpus, triggerTokens } from "./corpus";
export type { Corpus, Document, EventMention } from "./corpus";
export { ContextHashEncoder, FlatEncoder, encoderByName } from "./encoder";
export type { Encoder } from "./encoder";
export {
  extractCorpus,
  extractMention,
  meanPool,
  writeEmbeddingFile,
} from "./extract";
export type { ExtractionConfig, MentionExtraction } from "./extract";
export {
  compareEncoders,
  formatTable,
  loadManifest,
  runCoreDiagnostics,
} from "./diagnostics";
export { lemmatize } from "./lemma";
export {
  SEP_TOKEN,
  UNK_TOKEN,
  WordPieceTokenizer,
  characterVocabulary,
} from "./wordpiece";
