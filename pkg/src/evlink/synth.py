"""Synthetic benchmark data: planted chains with noisy centroid embeddings.

Each document gets a few chains; each chain gets a unit-sphere centroid
scaled by the separation ratio, and every mention's vector is the centroid
plus unit-scale Gaussian noise. The ratio therefore controls how cleanly
same-chain cosines separate from cross-chain ones. Types and lemmas are
drawn from small pools with deliberate collisions so the rule baselines
are imperfect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from evlink.corpus import Corpus, Document, EventMention
from evlink.embeddings import EmbeddingTable
from evlink.errors import ValidationError
from evlink.nn import derive_rng

LEMMA_POOL = [
    "attack", "strike", "capture", "seize", "bomb", "explosion", "meet",
    "meeting", "talk", "election", "vote", "protest", "march", "arrest",
    "detain", "fire", "shoot", "crash", "collide", "flood", "storm",
    "merger", "acquire", "launch", "land", "escape", "flee", "trial",
    "verdict", "appeal", "visit", "travel", "summit", "agree", "sign",
    "resign", "appoint", "injure", "wound", "rescue",
]

TYPE_POOL = ["conflict", "movement", "contact", "justice", "business",
             "disaster"]

# Same-chain mentions occasionally surface with a different lemma, and the
# pools are small, so lemma/type baselines make both error kinds.
ALT_LEMMA_PROB = 0.25


@dataclass
class SynthConfig:
    n_docs: int = 200
    dim: int = 32
    seed: int = 7
    sep_ratio: float = 5.0
    max_chains: int = 4
    max_chain_size: int = 4
    splits: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.n_docs < 3:
            raise ValidationError("need at least 3 documents to split")
        if self.dim < 2:
            raise ValidationError("dim must be at least 2")
        if self.sep_ratio <= 0:
            raise ValidationError("sep_ratio must be positive")
        if abs(sum(self.splits) - 1.0) > 1e-9:
            raise ValidationError("splits must sum to 1")


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def generate(config: SynthConfig) -> dict[str, tuple[Corpus, EmbeddingTable]]:
    """Build {split: (corpus, embeddings)} deterministically from the seed."""
    rng = derive_rng(config.seed, "synth")
    documents: list[Document] = []
    table_entries: list[tuple[str, np.ndarray]] = []

    for d in range(config.n_docs):
        doc_id = f"d{d:04d}"
        n_chains = int(rng.integers(1, config.max_chains + 1))
        sentences: list[list[str]] = []
        mentions: list[EventMention] = []
        m_idx = 0
        chain_specs = []
        for c in range(n_chains):
            size = int(rng.integers(1, config.max_chain_size + 1))
            centroid = config.sep_ratio * _unit_vector(rng, config.dim)
            lemma = LEMMA_POOL[int(rng.integers(len(LEMMA_POOL)))]
            etype = TYPE_POOL[int(rng.integers(len(TYPE_POOL)))]
            chain_specs.append((c, size, centroid, lemma, etype))
        # Interleave mentions of different chains through the document.
        slots = [c for c, size, *_ in chain_specs for _ in range(size)]
        rng.shuffle(slots)
        emitted = {c: 0 for c, *_ in chain_specs}
        for c in slots:
            _, size, centroid, lemma, etype = chain_specs[c]
            mention_lemma = lemma
            if size > 1 and rng.random() < ALT_LEMMA_PROB:
                mention_lemma = LEMMA_POOL[int(rng.integers(len(LEMMA_POOL)))]
            noise = rng.normal(size=config.dim) / np.sqrt(config.dim)
            vector = (centroid + noise).astype(np.float32)
            mention_id = f"{doc_id}_m{m_idx:03d}"
            sentences.append(["the", mention_lemma, "was", "reported", "."])
            mentions.append(EventMention(
                mention_id=mention_id, doc_id=doc_id,
                sent_idx=len(sentences) - 1, tok_start=1, tok_end=2,
                event_type=etype, head_lemma=mention_lemma,
                chain_id=f"{doc_id}_c{c}" if size > 1 else None))
            table_entries.append((mention_id, vector))
            emitted[c] += 1
            m_idx += 1
        documents.append(Document(doc_id, sentences, mentions))

    n_train = int(round(config.splits[0] * config.n_docs))
    n_dev = int(round(config.splits[1] * config.n_docs))
    split_docs = {"train": documents[:n_train],
                  "dev": documents[n_train:n_train + n_dev],
                  "test": documents[n_train + n_dev:]}
    vectors = dict(table_entries)
    out = {}
    for split, docs in split_docs.items():
        corpus = Corpus(docs, split_name=split)
        table = EmbeddingTable(config.dim, encoder=f"synth-seed{config.seed}")
        for mid in corpus.mention_ids():
            table.add(mid, vectors[mid])
        out[split] = (corpus, table)
    return out
