/**
 * Sequence encoders producing one final-layer vector per wordpiece.
 *
 * A real pretrained transformer fits behind the same interface; this
 * package ships deterministic offline encoders (hashed piece identities
 * mixed with neighboring pieces and position) so extraction, pooling and
 * the downstream file contract can run and be tested without model
 * weights. Encoders are frozen by construction: same input, same output.
 */

export interface Encoder {
  readonly name: string;
  readonly dim: number;
  /** One vector per input piece, in order. */
  encode(pieces: string[]): Float32Array[];
}

export class EncoderError extends Error {}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i += 1) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** xorshift32; decent spread, fully deterministic. */
function* randomStream(seed: number): Generator<number> {
  let state = seed >>> 0;
  if (state === 0) state = 0x9e3779b9;
  for (;;) {
    state ^= state << 13;
    state >>>= 0;
    state ^= state >> 17;
    state ^= state << 5;
    state >>>= 0;
    yield state / 0xffffffff;
  }
}

function unitVector(seedText: string, dim: number): Float64Array {
  const stream = randomStream(fnv1a(seedText));
  const out = new Float64Array(dim);
  let normSq = 0;
  for (let i = 0; i < dim; i += 1) {
    // sum of three uniforms, centered: cheap approximate gaussian
    const value =
      stream.next().value + stream.next().value + stream.next().value - 1.5;
    out[i] = value;
    normSq += value * value;
  }
  const norm = Math.sqrt(normSq) || 1;
  for (let i = 0; i < dim; i += 1) out[i] /= norm;
  return out;
}

/**
 * Context-mixing hash encoder: each piece's vector is its hashed identity
 * blended with its neighbors and a positional component, then normalized.
 * Mimics the shape of contextual output embeddings (identical pieces in
 * different contexts get different vectors).
 */
export class ContextHashEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;
  private readonly cache = new Map<string, Float64Array>();

  constructor(dim: number, name?: string) {
    if (!Number.isInteger(dim) || dim <= 0) {
      throw new EncoderError(`encoder dim must be positive, got ${dim}`);
    }
    this.dim = dim;
    this.name = name ?? `ctxhash-${dim}`;
  }

  private pieceVector(piece: string): Float64Array {
    let vec = this.cache.get(piece);
    if (!vec) {
      vec = unitVector(`piece:${piece}`, this.dim);
      this.cache.set(piece, vec);
    }
    return vec;
  }

  encode(pieces: string[]): Float32Array[] {
    const base = pieces.map((p) => this.pieceVector(p));
    const out: Float32Array[] = [];
    for (let i = 0; i < pieces.length; i += 1) {
      const mixed = new Float64Array(this.dim);
      const left = base[i - 1];
      const right = base[i + 1];
      const position = unitVector(`pos:${i % 64}`, this.dim);
      let normSq = 0;
      for (let d = 0; d < this.dim; d += 1) {
        let value = 0.7 * base[i][d] + 0.1 * position[d];
        if (left) value += 0.15 * left[d];
        if (right) value += 0.15 * right[d];
        mixed[d] = value;
        normSq += value * value;
      }
      const norm = Math.sqrt(normSq) || 1;
      const row = new Float32Array(this.dim);
      for (let d = 0; d < this.dim; d += 1) {
        row[d] = Math.fround(mixed[d] / norm);
      }
      out.push(row);
    }
    return out;
  }
}

/** Degenerate encoder: the same vector for every piece (a quality floor). */
export class FlatEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;
  private readonly row: Float32Array;

  constructor(dim: number, name?: string) {
    this.dim = dim;
    this.name = name ?? `flat-${dim}`;
    this.row = Float32Array.from(unitVector("flat", dim), Math.fround);
  }

  encode(pieces: string[]): Float32Array[] {
    return pieces.map(() => this.row.slice());
  }
}

/**
 * Resolve an encoder by name: `ctxhash-large` (1024 dims),
 * `ctxhash-base` (768), `ctxhash-<dim>`, `flat-<dim>`.
 */
export function encoderByName(name: string): Encoder {
  if (name === "ctxhash-large") return new ContextHashEncoder(1024, name);
  if (name === "ctxhash-base") return new ContextHashEncoder(768, name);
  let match = /^ctxhash-(\d+)$/.exec(name);
  if (match) return new ContextHashEncoder(Number(match[1]), name);
  match = /^flat-(\d+)$/.exec(name);
  if (match) return new FlatEncoder(Number(match[1]), name);
  throw new EncoderError(
    `unknown encoder '${name}' (try ctxhash-large, ctxhash-base, ` +
      `ctxhash-<dim>, flat-<dim>)`,
  );
}
