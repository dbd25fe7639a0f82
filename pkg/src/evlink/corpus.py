"""Corpus data model: tokenized documents, event mentions, gold chains.

Interchange format is a single JSON document::

    {"documents": [
        {"doc_id": "...",
         "sentences": [["tok", ...], ...],
         "mentions": [
            {"mention_id": "...", "sent_idx": 0, "tok_start": 1,
             "tok_end": 2, "event_type": null, "head_lemma": null,
             "chain_id": null},
            ...]},
        ...]}

UTF-8 throughout; unknown fields are ignored on read. Everything here is
immutable after load and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from evlink.errors import CorpusFormatError, ValidationError

VALID_SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class EventMention:
    """A trigger span inside one document, plus optional gold annotations.

    ``tok_end`` is exclusive. ``chain_id`` of None means the mention is its
    own singleton chain.
    """

    mention_id: str
    doc_id: str
    sent_idx: int
    tok_start: int
    tok_end: int
    event_type: str | None = None
    head_lemma: str | None = None
    chain_id: str | None = None

    @property
    def position(self) -> tuple[int, int, str]:
        """Total document order; mention_id breaks (impossible) span ties."""
        return (self.sent_idx, self.tok_start, self.mention_id)


@dataclass(frozen=True)
class CorefChain:
    chain_id: str
    member_ids: frozenset[str]

    def __post_init__(self):
        if not self.member_ids:
            raise ValidationError(f"chain '{self.chain_id}' has no members")


class Document:
    """One document: sentence token lists plus position-sorted mentions."""

    def __init__(self, doc_id: str, sentences: list[list[str]],
                 mentions: list[EventMention]):
        self.doc_id = doc_id
        self.sentences = sentences
        self.mentions = sorted(mentions, key=lambda m: m.position)
        self._validate()

    def _validate(self) -> None:
        seen: set[str] = set()
        for m in self.mentions:
            if m.doc_id != self.doc_id:
                raise ValidationError(
                    f"mention '{m.mention_id}' has doc_id '{m.doc_id}', "
                    f"expected '{self.doc_id}'")
            if m.mention_id in seen:
                raise ValidationError(
                    f"duplicate mention_id '{m.mention_id}' in document "
                    f"'{self.doc_id}'")
            seen.add(m.mention_id)
            if not 0 <= m.sent_idx < len(self.sentences):
                raise ValidationError(
                    f"mention '{m.mention_id}': sent_idx {m.sent_idx} outside "
                    f"document '{self.doc_id}' ({len(self.sentences)} sentences)")
            if m.tok_start >= m.tok_end:
                raise ValidationError(
                    f"mention '{m.mention_id}': empty span "
                    f"[{m.tok_start}, {m.tok_end})")
            sent_len = len(self.sentences[m.sent_idx])
            if m.tok_start < 0 or m.tok_end > sent_len:
                raise ValidationError(
                    f"mention '{m.mention_id}': span [{m.tok_start}, "
                    f"{m.tok_end}) outside sentence of {sent_len} tokens")

    def mention_ids(self) -> list[str]:
        return [m.mention_id for m in self.mentions]

    def mention(self, mention_id: str) -> EventMention:
        for m in self.mentions:
            if m.mention_id == mention_id:
                return m
        raise KeyError(mention_id)

    def trigger_tokens(self, m: EventMention) -> list[str]:
        return self.sentences[m.sent_idx][m.tok_start:m.tok_end]

    def __repr__(self):
        return (f"Document({self.doc_id!r}, {len(self.sentences)} sentences, "
                f"{len(self.mentions)} mentions)")


class Corpus:
    """A list of documents forming one split of a dataset."""

    def __init__(self, documents: list[Document],
                 split_name: str | None = None):
        self.documents = list(documents)
        if split_name is not None and split_name not in VALID_SPLITS:
            raise ValidationError(
                f"split_name must be one of {VALID_SPLITS}, got '{split_name}'")
        self.split_name = split_name
        seen_docs: set[str] = set()
        seen_mentions: set[str] = set()
        for doc in self.documents:
            if doc.doc_id in seen_docs:
                raise ValidationError(f"duplicate doc_id '{doc.doc_id}'")
            seen_docs.add(doc.doc_id)
            for m in doc.mentions:
                if m.mention_id in seen_mentions:
                    raise ValidationError(
                        f"mention_id '{m.mention_id}' appears in more than "
                        f"one document")
                seen_mentions.add(m.mention_id)

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def mention_ids(self) -> list[str]:
        return [m.mention_id for doc in self.documents for m in doc.mentions]

    def n_mentions(self) -> int:
        return sum(len(d.mentions) for d in self.documents)


def gold_chains(doc: Document) -> list[CorefChain]:
    """Gold chains of a document, singletons synthesized for null chain_ids.

    A null-chain mention becomes a singleton chain whose chain_id is the
    mention's own id. Chains are ordered by their earliest member.
    """
    members: dict[str, list[EventMention]] = {}
    for m in doc.mentions:
        cid = m.chain_id if m.chain_id is not None else m.mention_id
        members.setdefault(cid, []).append(m)
    chains = [CorefChain(cid, frozenset(m.mention_id for m in ms))
              for cid, ms in members.items()]
    first_pos = {c.chain_id: min(m.position for m in members[c.chain_id])
                 for c in chains}
    return sorted(chains, key=lambda c: first_pos[c.chain_id])


def lemma_match(a: str | None, b: str | None) -> bool:
    """True when the lemmas are equal or one contains the other.

    A missing lemma never matches (the validate command reports mentions
    that lack one).
    """
    if not a or not b:
        return False
    return a == b or a in b or b in a


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise CorpusFormatError(f"{context}: missing field '{key}'")
    return obj[key]


def _mention_from_dict(raw: dict, context: str) -> EventMention:
    def opt_str(key):
        value = raw.get(key)
        if value is not None and not isinstance(value, str):
            raise CorpusFormatError(
                f"{context}: field '{key}' must be a string or null")
        return value

    mention_id = _require(raw, "mention_id", context)
    where = f"{context}, mention '{mention_id}'"
    spans = [_require(raw, key, where)
             for key in ("sent_idx", "tok_start", "tok_end")]
    try:
        sent_idx, tok_start, tok_end = (int(v) for v in spans)
    except (TypeError, ValueError) as exc:
        raise CorpusFormatError(f"{where}: non-integer span field") from exc
    return EventMention(
        mention_id=mention_id,
        doc_id=raw.get("doc_id", ""),  # replaced by the enclosing document
        sent_idx=sent_idx,
        tok_start=tok_start,
        tok_end=tok_end,
        event_type=opt_str("event_type"),
        head_lemma=opt_str("head_lemma"),
        chain_id=opt_str("chain_id"),
    )


def corpus_from_dict(raw: dict, split_name: str | None = None) -> Corpus:
    docs_raw = _require(raw, "documents", "corpus")
    if not isinstance(docs_raw, list):
        raise CorpusFormatError("corpus: 'documents' must be a list")
    documents = []
    for d_idx, draw in enumerate(docs_raw):
        doc_id = _require(draw, "doc_id", f"document #{d_idx}")
        context = f"document '{doc_id}'"
        sentences = _require(draw, "sentences", context)
        if not isinstance(sentences, list) or not all(
                isinstance(s, list) for s in sentences):
            raise CorpusFormatError(f"{context}: 'sentences' must be a list "
                                    f"of token lists")
        mentions = []
        for mraw in _require(draw, "mentions", context):
            m = _mention_from_dict(mraw, context)
            mentions.append(EventMention(
                mention_id=m.mention_id, doc_id=doc_id, sent_idx=m.sent_idx,
                tok_start=m.tok_start, tok_end=m.tok_end,
                event_type=m.event_type, head_lemma=m.head_lemma,
                chain_id=m.chain_id))
        documents.append(Document(doc_id, sentences, mentions))
    return Corpus(documents, split_name=split_name)


def load_corpus(path, split_name: str | None = None) -> Corpus:
    """Load and validate a corpus interchange file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(
                f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
    return corpus_from_dict(raw, split_name=split_name)


def corpus_to_dict(corpus: Corpus) -> dict:
    return {"documents": [
        {"doc_id": doc.doc_id,
         "sentences": [list(s) for s in doc.sentences],
         "mentions": [
             {"mention_id": m.mention_id,
              "sent_idx": m.sent_idx,
              "tok_start": m.tok_start,
              "tok_end": m.tok_end,
              "event_type": m.event_type,
              "head_lemma": m.head_lemma,
              "chain_id": m.chain_id}
             for m in doc.mentions]}
        for doc in corpus.documents]}


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus back out; load_corpus(save_corpus(c)) == c."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_dict(corpus), fh, ensure_ascii=False, indent=1)
        fh.write("\n")
