"""Coreference metric suite: B3, MUC, CEAF-E, BLANC, and the CoNLL average.

All comparisons are confined within a document; corpus figures come from
aggregating per-document counts (micro, the default) or per-document F1s
(macro). Cross-document mention pairs and cross-document cluster
alignments are never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from evlink.cluster import Clustering
from evlink.errors import ValidationError


@dataclass(frozen=True)
class PRF:
    """Precision/recall/F1 with the raw counts kept for aggregation."""

    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    @property
    def precision(self) -> float:
        return self.p_num / self.p_den if self.p_den > 0 else 0.0

    @property
    def recall(self) -> float:
        return self.r_num / self.r_den if self.r_den > 0 else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.p_num + other.p_num, self.p_den + other.p_den,
                   self.r_num + other.r_num, self.r_den + other.r_den)


def _check_mention_sets(gold: Clustering, sys: Clustering) -> None:
    if gold.mention_ids() != sys.mention_ids():
        extra = sorted(sys.mention_ids() - gold.mention_ids())[:3]
        missing = sorted(gold.mention_ids() - sys.mention_ids())[:3]
        raise ValidationError(
            f"document '{gold.doc_id}': mention sets differ "
            f"(sys extra {extra}, sys missing {missing})")


def b_cubed(gold: Clustering, sys: Clustering) -> PRF:
    """Mention purity/coverage metric.

    Per-mention precision is the fraction of the mention's system cluster
    that lies in its gold cluster; recall swaps the roles. Both are
    averaged over mentions.
    """
    _check_mention_sets(gold, sys)
    gold_of = gold.cluster_map()
    sys_of = sys.cluster_map()
    p_num = 0.0
    r_num = 0.0
    for m in gold_of:
        overlap = len(gold_of[m] & sys_of[m])
        p_num += overlap / len(sys_of[m])
        r_num += overlap / len(gold_of[m])
    n = len(gold_of)
    return PRF(p_num, float(n), r_num, float(n))


def _muc_side(a: Clustering, b: Clustering) -> tuple[float, float]:
    """Link-based numerator/denominator with a's clusters as the key side."""
    b_of = b.cluster_map()
    num = 0.0
    den = 0.0
    for cluster in a.clusters:
        partitions = len({id(b_of[m]) for m in cluster})
        num += len(cluster) - partitions
        den += len(cluster) - 1
    return num, den


def muc(gold: Clustering, sys: Clustering) -> PRF:
    """Minimal missing/extra link metric.

    When every cluster on a side is a singleton that side's denominator is
    0 and the score is 0 by convention.
    """
    _check_mention_sets(gold, sys)
    r_num, r_den = _muc_side(gold, sys)
    p_num, p_den = _muc_side(sys, gold)
    return PRF(p_num, p_den, r_num, r_den)


def hungarian_max(scores) -> tuple[dict[int, int], float]:
    """Optimal one-to-one row->column assignment maximizing the total.

    scores is a rectangular matrix (list of rows or array). Every index of
    the smaller side is assigned. Returns ({row: col}, total).
    """
    rows = [list(map(float, r)) for r in scores]
    n = len(rows)
    m = len(rows[0]) if n else 0
    if n == 0 or m == 0:
        return {}, 0.0
    if any(len(r) != m for r in rows):
        raise ValidationError("score matrix is ragged")
    transposed = n > m
    if transposed:
        rows = [list(col) for col in zip(*rows)]
        n, m = m, n
    # Potentials-based O(n^2 m) assignment on the negated matrix.
    cost = [[-x for x in r] for r in rows]
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    match = [0] * (m + 1)       # column -> row (1-based, 0 = free)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    assignment = {}
    for j in range(1, m + 1):
        if match[j]:
            if transposed:
                assignment[j - 1] = match[j] - 1
            else:
                assignment[match[j] - 1] = j - 1
    total = sum(scores[r][c] for r, c in assignment.items())
    return assignment, float(total)


def _phi4(a: frozenset, b: frozenset) -> float:
    return 2.0 * len(a & b) / (len(a) + len(b))


def ceaf_e(gold: Clustering, sys: Clustering) -> PRF:
    """Entity alignment metric under the normalized-overlap similarity.

    The optimal one-to-one cluster alignment is found per document; its
    similarity total is divided by the number of system clusters
    (precision) and gold clusters (recall).
    """
    _check_mention_sets(gold, sys)
    if not gold.clusters or not sys.clusters:
        return PRF(0.0, float(len(sys.clusters)), 0.0, float(len(gold.clusters)))
    phi = [[_phi4(g, s) for s in sys.clusters] for g in gold.clusters]
    _, total = hungarian_max(phi)
    return PRF(total, float(len(sys.clusters)), total, float(len(gold.clusters)))


@dataclass(frozen=True)
class BlancCounts:
    """Within-document link counts behind the two BLANC components."""

    coref: PRF
    non_coref: PRF

    def __add__(self, other: "BlancCounts") -> "BlancCounts":
        return BlancCounts(self.coref + other.coref,
                           self.non_coref + other.non_coref)

    def score(self) -> float:
        """Mean of the two component F1s.

        A component whose link set is empty on both sides is excluded; if
        only one side is empty its F1 is 0 (already the PRF convention).
        With no links of either kind (single-mention data) the score is 1:
        the response is trivially identical to the gold.
        """
        c_defined = self.coref.p_den > 0 or self.coref.r_den > 0
        n_defined = self.non_coref.p_den > 0 or self.non_coref.r_den > 0
        if c_defined and n_defined:
            return 0.5 * (self.coref.f1 + self.non_coref.f1)
        if c_defined:
            return self.coref.f1
        if n_defined:
            return self.non_coref.f1
        return 1.0

    def summary(self) -> "MetricSummary":
        """Pooled view for report tables: component means under the same
        exclusion conventions as score()."""
        c_defined = self.coref.p_den > 0 or self.coref.r_den > 0
        n_defined = self.non_coref.p_den > 0 or self.non_coref.r_den > 0
        if c_defined and n_defined:
            return MetricSummary(
                0.5 * (self.coref.precision + self.non_coref.precision),
                0.5 * (self.coref.recall + self.non_coref.recall),
                self.score())
        if c_defined:
            return MetricSummary(self.coref.precision, self.coref.recall,
                                 self.score())
        if n_defined:
            return MetricSummary(self.non_coref.precision,
                                 self.non_coref.recall, self.score())
        return MetricSummary(1.0, 1.0, 1.0)


def _pairs_in(clusters) -> int:
    return sum(len(c) * (len(c) - 1) // 2 for c in clusters)


def blanc(gold: Clustering, sys: Clustering) -> BlancCounts:
    """Rand-index style metric over coreferent and non-coreferent links.

    Link sets are built within the document only. Counts are computed from
    cluster sizes and the gold/system contingency table.
    """
    _check_mention_sets(gold, sys)
    n = len(gold.mention_ids())
    total_pairs = n * (n - 1) // 2
    coref_gold = _pairs_in(gold.clusters)
    coref_sys = _pairs_in(sys.clusters)
    both = 0
    for g in gold.clusters:
        for s in sys.clusters:
            k = len(g & s)
            both += k * (k - 1) // 2
    non_gold = total_pairs - coref_gold
    non_sys = total_pairs - coref_sys
    non_both = total_pairs - coref_gold - coref_sys + both
    return BlancCounts(
        coref=PRF(float(both), float(coref_sys), float(both), float(coref_gold)),
        non_coref=PRF(float(non_both), float(non_sys),
                      float(non_both), float(non_gold)))


def conll_f1(b3, muc_, ceafe) -> float:
    """Arithmetic mean of the three F1s; accepts PRF objects or plain F1s."""
    def f(x):
        return x.f1 if isinstance(x, PRF) else float(x)
    return (f(b3) + f(muc_) + f(ceafe)) / 3.0


@dataclass(frozen=True)
class DocScores:
    doc_id: str
    b3: PRF
    muc: PRF
    ceaf_e: PRF
    blanc: BlancCounts

    @property
    def conll_f1(self) -> float:
        return conll_f1(self.b3, self.muc, self.ceaf_e)


def score_document(gold: Clustering, sys: Clustering) -> DocScores:
    return DocScores(doc_id=gold.doc_id,
                     b3=b_cubed(gold, sys),
                     muc=muc(gold, sys),
                     ceaf_e=ceaf_e(gold, sys),
                     blanc=blanc(gold, sys))


@dataclass(frozen=True)
class MetricSummary:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_prf(cls, prf: PRF) -> "MetricSummary":
        return cls(prf.precision, prf.recall, prf.f1)


@dataclass
class MetricReport:
    b3: MetricSummary
    muc: MetricSummary
    ceaf_e: MetricSummary
    blanc: MetricSummary
    blanc_coref: MetricSummary
    blanc_non_coref: MetricSummary
    blanc_score: float
    conll_f1: float
    mode: str
    per_doc: list[DocScores] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        def prf(s: MetricSummary) -> dict:
            return {"p": s.precision, "r": s.recall, "f": s.f1}
        return {
            "b3": prf(self.b3),
            "muc": prf(self.muc),
            "ceaf_e": prf(self.ceaf_e),
            "blanc": {**prf(self.blanc),
                      "coref": prf(self.blanc_coref),
                      "non_coref": prf(self.blanc_non_coref),
                      "score": self.blanc_score},
            "conll_f1": self.conll_f1,
            "mode": self.mode,
            "per_doc": [
                {"doc_id": d.doc_id,
                 "b3_f1": d.b3.f1, "muc_f1": d.muc.f1,
                 "ceaf_e_f1": d.ceaf_e.f1, "blanc": d.blanc.score(),
                 "conll_f1": d.conll_f1}
                for d in self.per_doc],
        }

    def format_table(self) -> str:
        rows = [("B3", self.b3), ("MUC", self.muc), ("CEAF-E", self.ceaf_e),
                ("BLANC", self.blanc)]
        lines = [f"{'metric':<8} {'P':>8} {'R':>8} {'F1':>8}"]
        for name, s in rows:
            lines.append(f"{name:<8} {100 * s.precision:8.2f} "
                         f"{100 * s.recall:8.2f} {100 * s.f1:8.2f}")
        lines.append(f"{'CoNLL':<8} {'':>8} {'':>8} "
                     f"{100 * self.conll_f1:8.2f}")
        lines.append(f"aggregation: {self.mode} over {len(self.per_doc)} "
                     f"documents")
        return "\n".join(lines)


def aggregate_corpus(per_doc: list[DocScores],
                     mode: str = "micro") -> MetricReport:
    """Fold per-document scores into one report.

    micro sums numerators/denominators across documents before dividing;
    macro averages the per-document F1s (and P/R) instead. Either way no
    pairing or alignment ever crosses a document boundary.
    """
    if not per_doc:
        raise ValidationError("cannot aggregate an empty corpus")
    if mode not in ("micro", "macro"):
        raise ValidationError(f"unknown aggregation mode '{mode}'")
    if mode == "micro":
        b3 = sum((d.b3 for d in per_doc), PRF())
        muc_ = sum((d.muc for d in per_doc), PRF())
        ceafe = sum((d.ceaf_e for d in per_doc), PRF())
        blanc_ = BlancCounts(PRF(), PRF())
        for d in per_doc:
            blanc_ = blanc_ + d.blanc
        report = MetricReport(
            b3=MetricSummary.from_prf(b3),
            muc=MetricSummary.from_prf(muc_),
            ceaf_e=MetricSummary.from_prf(ceafe),
            blanc=blanc_.summary(),
            blanc_coref=MetricSummary.from_prf(blanc_.coref),
            blanc_non_coref=MetricSummary.from_prf(blanc_.non_coref),
            blanc_score=blanc_.score(),
            conll_f1=conll_f1(b3, muc_, ceafe),
            mode=mode, per_doc=list(per_doc))
        return report

    def mean(values):
        return sum(values) / len(values)

    def macro_summary(get) -> MetricSummary:
        return MetricSummary(mean([get(d).precision for d in per_doc]),
                             mean([get(d).recall for d in per_doc]),
                             mean([get(d).f1 for d in per_doc]))

    b3 = macro_summary(lambda d: d.b3)
    muc_s = macro_summary(lambda d: d.muc)
    ceafe_s = macro_summary(lambda d: d.ceaf_e)
    blanc_c = macro_summary(lambda d: d.blanc.coref)
    blanc_n = macro_summary(lambda d: d.blanc.non_coref)
    return MetricReport(
        b3=b3, muc=muc_s, ceaf_e=ceafe_s,
        blanc=MetricSummary(
            mean([d.blanc.summary().precision for d in per_doc]),
            mean([d.blanc.summary().recall for d in per_doc]),
            mean([d.blanc.score() for d in per_doc])),
        blanc_coref=blanc_c, blanc_non_coref=blanc_n,
        blanc_score=mean([d.blanc.score() for d in per_doc]),
        conll_f1=(b3.f1 + muc_s.f1 + ceafe_s.f1) / 3.0,
        mode=mode, per_doc=list(per_doc))


@dataclass(frozen=True)
class ErrorCell:
    actual: int
    predicted: int

    @property
    def ratio(self) -> float | None:
        if self.actual == 0:
            return None
        return self.predicted / self.actual


@dataclass(frozen=True)
class ErrorBreakdown:
    """Pair-level confusion split by gold label and lemma agreement.

    'predicted' counts correct predictions within each actual cell:
    predicted-positive for the positive cells, predicted-negative for the
    negative ones.
    """

    pos_same_lemma: ErrorCell
    pos_diff_lemma: ErrorCell
    neg_same_lemma: ErrorCell
    neg_diff_lemma: ErrorCell

    @property
    def total(self) -> int:
        return (self.pos_same_lemma.actual + self.pos_diff_lemma.actual
                + self.neg_same_lemma.actual + self.neg_diff_lemma.actual)

    def format_table(self) -> str:
        cells = [("+ve same lemma", self.pos_same_lemma),
                 ("+ve diff lemma", self.pos_diff_lemma),
                 ("-ve same lemma", self.neg_same_lemma),
                 ("-ve diff lemma", self.neg_diff_lemma)]
        header = f"{'':<12}" + "".join(f"{name:>16}" for name, _ in cells)
        actual = f"{'actual':<12}" + "".join(
            f"{c.actual:>16}" for _, c in cells)
        predicted = f"{'predicted':<12}" + "".join(
            f"{c.predicted:>16}" for _, c in cells)
        ratios = f"{'ratio':<12}" + "".join(
            f"{'-' if c.ratio is None else format(c.ratio, '.2f'):>16}"
            for _, c in cells)
        return "\n".join([header, actual, predicted, ratios])


def error_analysis(items) -> ErrorBreakdown:
    """items: iterable of (gold_label, predicted_label, same_lemma) triples."""
    counts = {(pos, same): [0, 0] for pos in (True, False)
              for same in (True, False)}
    for gold_label, predicted, same_lemma in items:
        cell = counts[(bool(gold_label), bool(same_lemma))]
        cell[0] += 1
        if bool(predicted) == bool(gold_label):
            cell[1] += 1
    def cell(pos, same):
        actual, correct = counts[(pos, same)]
        return ErrorCell(actual, correct)
    return ErrorBreakdown(
        pos_same_lemma=cell(True, True),
        pos_diff_lemma=cell(True, False),
        neg_same_lemma=cell(False, True),
        neg_diff_lemma=cell(False, False))
