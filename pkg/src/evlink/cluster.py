"""Transitive-closure clustering from pairwise decisions, plus rule baselines.

Clusters are the connected components of the per-document decision graph.
Everything works on one document at a time; no cross-document edge can
exist by construction.
"""

from __future__ import annotations

import json

import numpy as np

from evlink.corpus import Corpus, Document, gold_chains, lemma_match
from evlink.errors import ValidationError


class Clustering:
    """A disjoint, exhaustive partition of one document's mention ids."""

    def __init__(self, doc_id: str, clusters):
        self.doc_id = doc_id
        self.clusters: tuple[frozenset[str], ...] = tuple(
            frozenset(c) for c in clusters)
        seen: set[str] = set()
        for c in self.clusters:
            if not c:
                raise ValidationError("empty cluster")
            if seen & c:
                raise ValidationError(
                    f"clusters overlap on {sorted(seen & c)}")
            seen |= c
        self._mentions = frozenset(seen)

    def mention_ids(self) -> frozenset[str]:
        return self._mentions

    def cluster_map(self) -> dict[str, frozenset[str]]:
        return {m: c for c in self.clusters for m in c}

    def __len__(self):
        return len(self.clusters)

    def __eq__(self, other):
        return (isinstance(other, Clustering)
                and self.doc_id == other.doc_id
                and set(self.clusters) == set(other.clusters))

    def __repr__(self):
        return f"Clustering({self.doc_id!r}, {len(self.clusters)} clusters)"


def gold_clustering(doc: Document) -> Clustering:
    """Partition by gold chain ids; null-chain mentions become singletons."""
    return Clustering(doc.doc_id,
                      [c.member_ids for c in gold_chains(doc)])


class AdjacencyMatrix:
    """Symmetric boolean mention-by-mention matrix, diagonal always true."""

    def __init__(self, doc_id: str, mention_ids: list[str],
                 matrix: np.ndarray):
        n = len(mention_ids)
        matrix = np.asarray(matrix, dtype=bool)
        if matrix.shape != (n, n):
            raise ValidationError(
                f"matrix shape {matrix.shape} does not match {n} mentions")
        if not np.array_equal(matrix, matrix.T):
            raise ValidationError("adjacency matrix must be symmetric")
        if not matrix.diagonal().all():
            raise ValidationError("adjacency diagonal must be true")
        self.doc_id = doc_id
        self.mention_ids = list(mention_ids)
        self.matrix = matrix

    @property
    def n(self) -> int:
        return len(self.mention_ids)


class UnionFind:
    """Union by rank with path compression over 0..n-1."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def adjacency_from_decisions(doc: Document, decisions) -> AdjacencyMatrix:
    """Fill a matrix from pair decisions; pairs not mentioned stay false.

    Closure is NOT taken here; connected_components does that.
    """
    ids = doc.mention_ids()
    index = {m: i for i, m in enumerate(ids)}
    matrix = np.eye(len(ids), dtype=bool)
    for (first, second), flag in decisions.items():
        if first not in index or second not in index:
            missing = first if first not in index else second
            raise ValidationError(
                f"decision references mention '{missing}' outside document "
                f"'{doc.doc_id}'")
        i, j = index[first], index[second]
        matrix[i, j] = matrix[j, i] = bool(flag)
        matrix[i, i] = matrix[j, j] = True
    return AdjacencyMatrix(doc.doc_id, ids, matrix)


def connected_components(adj: AdjacencyMatrix) -> Clustering:
    """Connected components = transitive closure of the pairwise relation.

    Clusters come out ordered by their earliest mention in document order.
    """
    n = adj.n
    uf = UnionFind(n)
    rows, cols = np.nonzero(np.triu(adj.matrix, k=1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        uf.union(i, j)
    groups: dict[int, list[str]] = {}
    order: list[int] = []
    for i in range(n):
        root = uf.find(i)
        if root not in groups:
            groups[root] = []
            order.append(root)
        groups[root].append(adj.mention_ids[i])
    return Clustering(adj.doc_id, [groups[r] for r in order])


BASELINE_RULES = ("singletons", "type", "lemma", "lemma_and_type")


def baseline_adjacency(doc: Document, rule: str) -> AdjacencyMatrix:
    """Rule-based adjacency; a mention missing the needed field never matches."""
    if rule not in BASELINE_RULES:
        raise ValidationError(f"unknown baseline rule '{rule}'")
    mentions = doc.mentions
    n = len(mentions)
    matrix = np.eye(n, dtype=bool)
    if rule != "singletons":
        for i in range(n):
            for j in range(i + 1, n):
                a, b = mentions[i], mentions[j]
                same_type = (a.event_type is not None
                             and a.event_type == b.event_type)
                if rule == "type":
                    hit = same_type
                elif rule == "lemma":
                    hit = lemma_match(a.head_lemma, b.head_lemma)
                else:
                    hit = same_type and lemma_match(a.head_lemma, b.head_lemma)
                matrix[i, j] = matrix[j, i] = hit
    return AdjacencyMatrix(doc.doc_id, doc.mention_ids(), matrix)


def cluster_to_sorted_lists(clustering: Clustering,
                            doc: Document) -> list[list[str]]:
    """Canonical cluster layout: members and clusters in document order."""
    pos = {m.mention_id: i for i, m in enumerate(doc.mentions)}
    out = [sorted(c, key=lambda m: pos[m]) for c in clustering.clusters]
    return sorted(out, key=lambda c: pos[c[0]])


def write_clusterings(clusterings: list[Clustering], corpus: Corpus,
                      path) -> None:
    """System-output file: one {"doc_id", "clusters"} JSON object per line."""
    by_doc = {c.doc_id: c for c in clusterings}
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            if doc.doc_id not in by_doc:
                continue
            record = {"doc_id": doc.doc_id,
                      "clusters": cluster_to_sorted_lists(by_doc[doc.doc_id],
                                                          doc)}
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_clusterings(path) -> list[Clustering]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"{path}:{lineno}: bad JSON: {exc.msg}") from exc
            out.append(Clustering(record["doc_id"], record["clusters"]))
    return out
