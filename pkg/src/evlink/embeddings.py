"""Mention embedding files: fixed-dimension float32 vectors keyed by mention.

File format is line-delimited JSON, one record per line::

    {"mention_id": "d1_m1", "vector": [0.25, -1.5, ...]}

An optional first line carries a header::

    {"format": "evlink-emb", "version": 1, "dim": 1024, "encoder": "..."}

When the header is present its dim is enforced. Values are float32 and are
serialized with full round-trip precision, so write followed by read is
bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from evlink.corpus import Corpus
from evlink.errors import (DimensionError, MissingEmbeddingError,
                           ValidationError)

HEADER_FORMAT = "evlink-emb"
HEADER_VERSION = 1


class EmbeddingTable:
    """mention_id -> float32 vector, all of one dimension.

    Immutable once built; the stored arrays are marked read-only.
    """

    def __init__(self, dim: int, encoder: str | None = None):
        if int(dim) <= 0:
            raise ValidationError(f"embedding dim must be positive, got {dim}")
        self.dim = int(dim)
        self.encoder = encoder
        self._entries: dict[str, np.ndarray] = {}

    def add(self, mention_id: str, vector) -> None:
        if mention_id in self._entries:
            raise ValidationError(f"duplicate mention_id '{mention_id}'")
        vec = np.asarray(vector, dtype=np.float32)
        if vec.ndim != 1 or vec.shape[0] != self.dim:
            raise DimensionError(
                f"mention '{mention_id}': vector has length "
                f"{vec.shape[0] if vec.ndim == 1 else vec.shape}, "
                f"table dim is {self.dim}")
        if not np.all(np.isfinite(vec)):
            raise ValidationError(
                f"mention '{mention_id}': vector has non-finite components")
        vec = np.ascontiguousarray(vec)
        vec.flags.writeable = False
        self._entries[mention_id] = vec

    def lookup(self, mention_id: str) -> np.ndarray:
        try:
            return self._entries[mention_id]
        except KeyError:
            raise MissingEmbeddingError(
                f"no embedding for mention '{mention_id}'") from None

    def __contains__(self, mention_id: str) -> bool:
        return mention_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def ids(self) -> list[str]:
        return list(self._entries)

    def matrix(self, mention_ids: list[str]) -> np.ndarray:
        """Stack the vectors for the given ids into an (n, dim) array."""
        if not mention_ids:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.lookup(i) for i in mention_ids])


def read_embeddings(path, expected_dim: int | None = None) -> EmbeddingTable:
    """Read an embedding file, enforcing a uniform dimension.

    expected_dim, when given, must match both the header (if any) and every
    record.
    """
    table: EmbeddingTable | None = None
    encoder = None
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
            if lineno == 1 and "format" in record:
                if record["format"] != HEADER_FORMAT:
                    raise ValidationError(
                        f"{path}: unknown format '{record['format']}'")
                if record.get("version") != HEADER_VERSION:
                    raise ValidationError(
                        f"{path}: unsupported version {record.get('version')}")
                header_dim = int(record["dim"])
                if expected_dim is not None and header_dim != expected_dim:
                    raise DimensionError(
                        f"{path}: header dim {header_dim} != expected "
                        f"{expected_dim}")
                encoder = record.get("encoder")
                table = EmbeddingTable(header_dim, encoder=encoder)
                continue
            if "mention_id" not in record or "vector" not in record:
                raise ValidationError(
                    f"{path}:{lineno}: record needs 'mention_id' and 'vector'")
            mention_id = record["mention_id"]
            vector = record["vector"]
            if table is None:
                dim = len(vector)
                if expected_dim is not None and dim != expected_dim:
                    raise DimensionError(
                        f"{path}: mention '{mention_id}' has dim {dim}, "
                        f"expected {expected_dim}")
                table = EmbeddingTable(dim)
            if len(vector) != table.dim:
                raise DimensionError(
                    f"{path}:{lineno}: mention '{mention_id}' has dim "
                    f"{len(vector)}, table dim is {table.dim}")
            table.add(mention_id, vector)
    if table is None:
        # Empty file: a table with no entries; dimension only known if forced.
        if expected_dim is None:
            raise ValidationError(f"{path}: empty embedding file without a "
                                  f"header or expected_dim")
        table = EmbeddingTable(expected_dim)
    return table


def write_embeddings(table: EmbeddingTable, path) -> None:
    """Write the canonical embedding file; read_embeddings inverts exactly.

    Records are sorted by mention_id so output bytes are deterministic.
    """
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": HEADER_FORMAT, "version": HEADER_VERSION,
                  "dim": table.dim}
        if table.encoder is not None:
            header["encoder"] = table.encoder
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for mention_id in sorted(table.ids()):
            vec = table.lookup(mention_id)
            # float() of a float32 is exact; json repr round-trips float64.
            record = {"mention_id": mention_id,
                      "vector": [float(x) for x in vec]}
            fh.write(json.dumps(record) + "\n")


def coverage_gaps(corpus: Corpus, table: EmbeddingTable) -> list[str]:
    """Corpus mention ids that have no vector, sorted for reporting."""
    return sorted(m for m in corpus.mention_ids() if m not in table)


def require_coverage(corpus: Corpus, table: EmbeddingTable,
                     what: str = "corpus") -> None:
    missing = coverage_gaps(corpus, table)
    if missing:
        shown = ", ".join(missing[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        raise MissingEmbeddingError(
            f"{what}: {len(missing)} mentions lack embeddings: {shown}{more}")
