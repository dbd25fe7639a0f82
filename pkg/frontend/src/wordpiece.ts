/**
 * WordPiece tokenization over pre-tokenized words, tracking which pieces
 * came from which word so trigger pieces can be located after splitting.
 *
 * Greedy longest-match-first against the vocabulary; continuation pieces
 * carry the "##" prefix; a word with no match at some position becomes a
 * single [UNK]. Words reserved as special tokens pass through unsplit.
 */

export const UNK_TOKEN = "[UNK]";
export const SEP_TOKEN = "[SEP]";

export interface WordPieceConfig {
  /** token -> id; ids are not used for encoding but kept for vocab files */
  vocab: Record<string, number>;
  lowercase?: boolean;
  continuationPrefix?: string;
  maxCharsPerWord?: number;
}

export interface AlignedPiece {
  piece: string;
  /** index of the source word in the input word list */
  wordIndex: number;
}

export class WordPieceTokenizer {
  private readonly vocab: Set<string>;
  private readonly lowercase: boolean;
  private readonly prefix: string;
  private readonly maxCharsPerWord: number;

  constructor(config: WordPieceConfig) {
    this.vocab = new Set(Object.keys(config.vocab));
    this.lowercase = config.lowercase ?? true;
    this.prefix = config.continuationPrefix ?? "##";
    this.maxCharsPerWord = config.maxCharsPerWord ?? 100;
  }

  /** Split one word into pieces (greedy longest match). */
  tokenizeWord(word: string): string[] {
    if (word === SEP_TOKEN || this.vocab.has(word)) {
      return [word];
    }
    const text = this.lowercase ? word.toLowerCase() : word;
    if (this.vocab.has(text)) {
      return [text];
    }
    if (text.length > this.maxCharsPerWord) {
      return [UNK_TOKEN];
    }
    const pieces: string[] = [];
    let start = 0;
    while (start < text.length) {
      let end = text.length;
      let found: string | null = null;
      while (end > start) {
        let candidate = text.slice(start, end);
        if (start > 0) candidate = this.prefix + candidate;
        if (this.vocab.has(candidate)) {
          found = candidate;
          break;
        }
        end -= 1;
      }
      if (found === null) {
        return [UNK_TOKEN];
      }
      pieces.push(found);
      start = end;
    }
    return pieces;
  }

  /** Tokenize a word sequence, keeping the piece -> word alignment. */
  tokenize(words: string[]): AlignedPiece[] {
    const out: AlignedPiece[] = [];
    words.forEach((word, wordIndex) => {
      for (const piece of this.tokenizeWord(word)) {
        out.push({ piece, wordIndex });
      }
    });
    return out;
  }
}

/**
 * Character-level vocabulary: every printable ASCII character as a start
 * piece and as a continuation piece. Any word tokenizes without [UNK]
 * (non-ASCII falls back to [UNK]); useful when no trained vocabulary file
 * is at hand.
 */
export function characterVocabulary(): Record<string, number> {
  const vocab: Record<string, number> = {
    [UNK_TOKEN]: 0,
    [SEP_TOKEN]: 1,
  };
  let id = 2;
  for (let code = 33; code < 127; code += 1) {
    const ch = String.fromCharCode(code);
    vocab[ch] = id++;
    vocab[`##${ch}`] = id++;
  }
  return vocab;
}
