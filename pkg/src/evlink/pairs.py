"""Mention pair generation, gold labeling, and joint feature construction.

A mention is paired with every mention that precedes it in the same
document; the two sampling filters keep only same-type or lemma-matching
pairs. Pair order is always (earlier, later), at training and prediction
time alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from evlink.cluster import Clustering
from evlink.corpus import Document, lemma_match
from evlink.errors import DimensionError, ValidationError


class PairStrategy(str, Enum):
    ALL_PRECEDING = "all_preceding"
    SAME_TYPE = "same_type"
    LEMMA_MATCH = "lemma_match"


@dataclass(frozen=True)
class MentionPair:
    first: str
    second: str
    label: bool | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.first, self.second)


@dataclass(frozen=True)
class PairFeature:
    """Joint input of the pair regressor: [e1, e2, e1*e2] (elementwise)."""

    e1: np.ndarray
    e2: np.ndarray
    joint: np.ndarray


def generate_pairs(doc: Document, strategy: PairStrategy) -> list[MentionPair]:
    """Ordered pairs of the document under the sampling strategy.

    Output is ordered by (second, first) document position, so the full
    strategy yields exactly n(n-1)/2 pairs and the filtered strategies
    yield subsets in the same order.
    """
    strategy = PairStrategy(strategy)
    mentions = doc.mentions
    out: list[MentionPair] = []
    for j in range(len(mentions)):
        later = mentions[j]
        for i in range(j):
            earlier = mentions[i]
            if strategy is PairStrategy.SAME_TYPE:
                if earlier.event_type is None or \
                        earlier.event_type != later.event_type:
                    continue
            elif strategy is PairStrategy.LEMMA_MATCH:
                if not lemma_match(earlier.head_lemma, later.head_lemma):
                    continue
            out.append(MentionPair(earlier.mention_id, later.mention_id))
    return out


def label_pairs(pairs: list[MentionPair], gold: Clustering) -> list[MentionPair]:
    """Label true iff both members share a gold cluster."""
    cluster_of = gold.cluster_map()
    labeled = []
    for pair in pairs:
        for member in (pair.first, pair.second):
            if member not in cluster_of:
                raise ValidationError(
                    f"pair member '{member}' absent from gold clustering "
                    f"of '{gold.doc_id}'")
        labeled.append(MentionPair(
            pair.first, pair.second,
            cluster_of[pair.first] is cluster_of[pair.second]))
    return labeled


def labeled_pairs(doc: Document, gold: Clustering,
                  strategy: PairStrategy) -> list[MentionPair]:
    return label_pairs(generate_pairs(doc, strategy), gold)


def joint_representation(e1, e2) -> PairFeature:
    """Concatenate the two vectors and their elementwise product."""
    e1 = np.asarray(e1, dtype=np.float32)
    e2 = np.asarray(e2, dtype=np.float32)
    if e1.shape != e2.shape or e1.ndim != 1:
        raise DimensionError(
            f"pair vectors must share one dimension, got {e1.shape} "
            f"and {e2.shape}")
    joint = np.concatenate([e1, e2, e1 * e2])
    return PairFeature(e1=e1, e2=e2, joint=joint)


def joint_matrix(E1: np.ndarray, E2: np.ndarray) -> np.ndarray:
    """Batched joint representation: (n, dim) x2 -> (n, 3*dim) float32."""
    E1 = np.asarray(E1, dtype=np.float32)
    E2 = np.asarray(E2, dtype=np.float32)
    if E1.shape != E2.shape:
        raise DimensionError(f"shape mismatch {E1.shape} vs {E2.shape}")
    return np.ascontiguousarray(np.concatenate([E1, E2, E1 * E2], axis=1))


def downsample_negatives(pairs: list[MentionPair], keep_ratio: float,
                         rng: np.random.Generator) -> list[MentionPair]:
    """Keep all positives and each negative with probability keep_ratio.

    Off by default in the pipeline; exists for sampling experiments.
    """
    if not 0.0 < keep_ratio <= 1.0:
        raise ValidationError("keep_ratio must be in (0, 1]")
    if keep_ratio == 1.0:
        return list(pairs)
    out = []
    for pair in pairs:
        if pair.label is None:
            raise ValidationError("downsampling requires labeled pairs")
        if pair.label or rng.random() < keep_ratio:
            out.append(pair)
    return out
