"""Acceptance suite: one test per release criterion.

Each test prints a `[acceptance] <name>: PASS/FAIL` line (run pytest -s to
watch them stream). Tolerances and runtime budgets are fixed here, not
configurable.
"""

import contextlib
import time

import numpy as np
import pytest

from evlink.cluster import (AdjacencyMatrix, Clustering,
                            baseline_adjacency, connected_components,
                            gold_clustering)
from evlink.corpus import save_corpus
from evlink.embeddings import EmbeddingTable, write_embeddings
from evlink.metrics import (b_cubed, blanc, ceaf_e, conll_f1,
                            hungarian_max, muc)
from evlink.nn import (Activation, DenseLayer, TrainConfig, derive_rng,
                       finite_difference_check, mse_cosine_batch)
from evlink.pairs import MentionPair, PairStrategy, labeled_pairs
from evlink.pipeline import Method, PipelineConfig, run_pipeline
from evlink.scorers import (CosineThresholdModel, CosineTransformModel,
                            compute_diagnostics, cosine_decide,
                            train_cosine_transform, train_logistic_regressor)
from evlink.synth import SynthConfig, generate
from oracles import (brute_assignment_max, brute_b3, brute_blanc, brute_ceafe,
                     brute_muc, random_partition)


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    print(f"[acceptance] {name}: PASS")


def clustering(parts, doc_id="d"):
    return Clustering(doc_id, parts)


# ---------------------------------------------------------------------------

def test_metric_oracle_equivalence():
    with criterion("metric oracle equivalence (1000 partitions, n<=8)"):
        start = time.perf_counter()
        rng = np.random.default_rng(2024)

        checked = 0
        while checked < 1000:
            n = int(rng.integers(1, 9))
            items = [f"m{i}" for i in range(n)]
            gold_sets = random_partition(rng, items)
            sys_sets = random_partition(rng, items)
            gold, sys = clustering(gold_sets), clustering(sys_sets)

            ours = b_cubed(gold, sys)
            p, r, f = brute_b3(gold_sets, sys_sets)
            assert abs(ours.precision - p) <= 1e-12
            assert abs(ours.recall - r) <= 1e-12
            assert abs(ours.f1 - f) <= 1e-12

            ours = muc(gold, sys)
            p, r, f = brute_muc(gold_sets, sys_sets)
            assert abs(ours.precision - p) <= 1e-12
            assert abs(ours.recall - r) <= 1e-12
            assert abs(ours.f1 - f) <= 1e-12

            counts = blanc(gold, sys)
            (pc, rc, fc), (pn, rn, fn), score = brute_blanc(gold_sets,
                                                            sys_sets)
            for got, want in ((counts.coref.precision, pc),
                              (counts.coref.recall, rc),
                              (counts.coref.f1, fc),
                              (counts.non_coref.precision, pn),
                              (counts.non_coref.recall, rn),
                              (counts.non_coref.f1, fn),
                              (counts.score(), score)):
                assert abs(got - want) <= 1e-12
            checked += 1

        # CEAF-E against exhaustive permutation alignment, within the
        # oracle's feasible range of <= 6 clusters per side.
        checked = 0
        while checked < 1000:
            n = int(rng.integers(1, 9))
            items = [f"m{i}" for i in range(n)]
            gold_sets = random_partition(rng, items)
            sys_sets = random_partition(rng, items)
            if max(len(gold_sets), len(sys_sets)) > 6:
                continue
            gold, sys = clustering(gold_sets), clustering(sys_sets)
            ours = ceaf_e(gold, sys)
            p, r, f = brute_ceafe(gold_sets, sys_sets)
            assert abs(ours.precision - p) <= 1e-12
            assert abs(ours.recall - r) <= 1e-12
            assert abs(ours.f1 - f) <= 1e-12
            checked += 1

        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"took {elapsed:.1f}s, budget 30s"


def test_worked_examples():
    with criterion("worked examples (gold {abc} vs sys {ab},{c})"):
        gold = clustering([{"a", "b", "c"}])
        sys = clustering([{"a", "b"}, {"c"}])
        assert b_cubed(gold, sys).f1 == pytest.approx(5 / 7, abs=1e-12)
        assert muc(gold, sys).f1 == pytest.approx(2 / 3, abs=1e-12)
        assert ceaf_e(gold, sys).f1 == pytest.approx(8 / 15, abs=1e-12)
        for parts in ([{"a", "b", "c"}], [{"a", "b"}, {"c"}]):
            g, s = clustering(parts), clustering(parts)
            for prf in (b_cubed(g, s), muc(g, s), ceaf_e(g, s)):
                assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)
            assert blanc(g, s).score() == pytest.approx(1.0, abs=1e-12)


def test_conll_average_reproduces_reference_rows():
    with criterion("CoNLL average on published rows"):
        assert conll_f1(92.71, 65.45, 88.78) == pytest.approx(82.31,
                                                              abs=0.005)
        assert conll_f1(89.35, 61.81, 85.74) == pytest.approx(78.97,
                                                              abs=0.005)


def test_model_selection_average_of_two():
    with criterion("B3/MUC model-selection average"):
        assert (90.54 + 59.88) / 2 == pytest.approx(75.21, abs=0.005)


def test_hungarian_exact_up_to_six():
    with criterion("Hungarian optimal totals vs enumeration (500 matrices)"):
        start = time.perf_counter()
        rng = np.random.default_rng(99)
        for trial in range(500):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            matrix = (rng.random((n, m)) * 2 - 0.5).tolist()
            assignment, total = hungarian_max(matrix)
            _, best = brute_assignment_max(matrix)
            assert total == pytest.approx(best, abs=1e-12)
            assert len(assignment) == min(n, m)
            assert len(set(assignment.values())) == len(assignment)
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"


def test_gradient_checks():
    with criterion("backprop vs central differences (>=100 instances)"):
        rng = derive_rng(314, "test")
        worst = 0.0
        # pair regressor path: square activation + log-softmax + NLL
        for _ in range(60):
            dim = int(rng.integers(2, 5))
            hidden = int(rng.integers(2, 9))
            layers = [
                DenseLayer.random(3 * dim, hidden, Activation.SQUARE, rng),
                DenseLayer.random(hidden, 2, Activation.LOG_SOFTMAX, rng),
            ]
            x = rng.standard_normal(3 * dim).astype(np.float32)
            target = int(rng.integers(2))

            def nll(out64):
                row = out64[0] if out64.ndim == 2 else out64
                grad = np.zeros_like(out64)
                if out64.ndim == 2:
                    grad[0, target] = -1.0
                else:
                    grad[target] = -1.0
                return -float(row[target]), grad

            report = finite_difference_check(layers, nll, x, tol=1e-3)
            worst = max(worst, report.max_rel_error)
        assert worst < 1e-3, f"regressor path max rel error {worst:.2e}"

        # cosine-transform path: shared linear map under the cosine MSE
        worst = 0.0
        for _ in range(60):
            dim = int(rng.integers(2, 6))
            n_pairs = int(rng.integers(1, 5))
            layer = DenseLayer.random(dim, dim, Activation.IDENTITY, rng)
            layer.weights += np.eye(dim, dtype=np.float32)
            e1 = rng.standard_normal((n_pairs, dim)).astype(np.float32)
            e2 = rng.standard_normal((n_pairs, dim)).astype(np.float32)
            y = np.where(rng.random(n_pairs) < 0.5, 1.0, -1.0)

            from evlink import kernels
            t1 = kernels.affine_fwd(e1, layer.weights, layer.bias)
            t2 = kernels.affine_fwd(e2, layer.weights, layer.bias)
            _, g1, g2 = mse_cosine_batch(t1, t2, y)
            _, dw1, db1 = kernels.affine_bwd(e1, layer.weights, g1)
            _, dw2, db2 = kernels.affine_bwd(e2, layer.weights, g2)
            dw = dw1.astype(np.float64) + dw2
            db = db1.astype(np.float64) + db2

            def loss64(w64, b64):
                t1_ = e1.astype(np.float64) @ w64.T + b64
                t2_ = e2.astype(np.float64) @ w64.T + b64
                cos = (t1_ * t2_).sum(axis=1) / (
                    np.linalg.norm(t1_, axis=1) * np.linalg.norm(t2_, axis=1))
                return float(((cos - y) ** 2).mean())

            h = 1e-5
            w64 = layer.weights.astype(np.float64)
            b64 = layer.bias.astype(np.float64)
            for idx in np.ndindex(w64.shape):
                up, down = w64.copy(), w64.copy()
                up[idx] += h
                down[idx] -= h
                fd = (loss64(up, b64) - loss64(down, b64)) / (2 * h)
                rel = abs(dw[idx] - fd) / max(abs(fd), abs(dw[idx]), 1e-6)
                worst = max(worst, rel)
            for i in range(dim):
                up, down = b64.copy(), b64.copy()
                up[i] += h
                down[i] -= h
                fd = (loss64(w64, up) - loss64(w64, down)) / (2 * h)
                rel = abs(db[i] - fd) / max(abs(fd), abs(db[i]), 1e-6)
                worst = max(worst, rel)
        assert worst < 1e-3, f"cosine path max rel error {worst:.2e}"


def test_identity_init_is_exact_noop():
    with criterion("identity-initialized transform is a bit-exact no-op"):
        rng = np.random.default_rng(5)
        dim = 24
        table = EmbeddingTable(dim)
        for i in range(40):
            table.add(f"m{i}", rng.standard_normal(dim).astype(np.float32))
        pairs = [MentionPair(f"m{i}", f"m{j}", (i + j) % 3 == 0)
                 for i in range(40) for j in range(i + 1, 40)][:400]
        transform = CosineTransformModel.identity(dim)

        plain = compute_diagnostics(pairs, table)
        mapped = compute_diagnostics(pairs, table, transform)
        assert plain.cos_plus == mapped.cos_plus
        assert plain.cos_minus == mapped.cos_minus

        for threshold in (0.0, 0.25, 0.5, 0.75):
            a = CosineThresholdModel(threshold)
            b = CosineThresholdModel(threshold, transform)
            for pair in pairs[:100]:
                e1 = table.lookup(pair.first)
                e2 = table.lookup(pair.second)
                assert cosine_decide(a, e1, e2) == cosine_decide(b, e1, e2)


def test_freeze_contract():
    with criterion("frozen transform untouched by regressor training"):
        data = generate(SynthConfig(n_docs=24, dim=16, seed=21))
        (train_corpus, train_table) = data["train"]
        (dev_corpus, dev_table) = data["dev"]
        rng = derive_rng(21, "test")
        frozen = CosineTransformModel(
            DenseLayer.random(16, 16, Activation.IDENTITY, rng))
        before = frozen.checksum()
        pairs = []
        for doc in train_corpus:
            pairs.extend(labeled_pairs(doc, gold_clustering(doc),
                                       PairStrategy.ALL_PRECEDING))
        train_logistic_regressor(
            pairs, train_table, dev_corpus, dev_table,
            TrainConfig(epochs=10, lr=1e-3, seed=21),
            frozen_transform=frozen)
        assert frozen.checksum() == before


def _closure_oracle(matrix):
    """Boolean reachability by repeated squaring (numpy, independent of the
    union-find implementation)."""
    reach = matrix.astype(np.int64)
    n = reach.shape[0]
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        reach = ((reach @ reach) + reach > 0).astype(np.int64)
    seen = set()
    comps = []
    for i in range(n):
        if i in seen:
            continue
        comp = frozenset(np.nonzero(reach[i])[0].tolist())
        seen |= comp
        comps.append(comp)
    return sorted(comps, key=min)


def test_clustering_closure_and_singleton_baseline():
    with criterion("components equal boolean closure (1000 graphs, n<=50)"):
        rng = np.random.default_rng(77)
        for _ in range(1000):
            n = int(rng.integers(1, 51))
            density = rng.random() * 0.15
            matrix = np.eye(n, dtype=bool)
            upper = rng.random((n, n)) < density
            matrix |= np.triu(upper, 1) | np.triu(upper, 1).T
            adj = AdjacencyMatrix("d", [f"m{i}" for i in range(n)], matrix)
            ours = connected_components(adj)
            got = sorted((frozenset(int(m[1:]) for m in c)
                          for c in ours.clusters), key=min)
            assert got == _closure_oracle(matrix)

    with criterion("singletons baseline scores MUC F1 = 0"):
        from test_corpus import make_doc
        doc = make_doc(["e1", "e1", None, "e2", "e2", "e2"])
        gold = gold_clustering(doc)
        sys = connected_components(baseline_adjacency(doc, "singletons"))
        prf = muc(gold, sys)
        assert prf.f1 == 0.0
        assert prf.recall == 0.0


@pytest.fixture(scope="module")
def benchmark_dir(tmp_path_factory):
    """The bundled generator at its benchmark settings: seed 7, 200
    documents, separation/noise ratio 5."""
    out = tmp_path_factory.mktemp("benchmark")
    data = generate(SynthConfig(n_docs=200, dim=32, seed=7, sep_ratio=5.0))
    for split, (corpus, table) in data.items():
        save_corpus(corpus, out / f"{split}.corpus.json")
        write_embeddings(table, out / f"{split}.emb.jsonl")
    return out


def _benchmark_config(benchmark_dir, out, method, **overrides):
    cfg = PipelineConfig(
        method=method,
        dev_corpus=str(benchmark_dir / "dev.corpus.json"),
        test_corpus=str(benchmark_dir / "test.corpus.json"),
        dev_embeddings=str(benchmark_dir / "dev.emb.jsonl"),
        test_embeddings=str(benchmark_dir / "test.emb.jsonl"),
        out=str(out), seed=7)
    if method is not Method.COSINE:
        cfg.train_corpus = str(benchmark_dir / "train.corpus.json")
        cfg.train_embeddings = str(benchmark_dir / "train.emb.jsonl")
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def test_end_to_end_synthetic_benchmark(benchmark_dir, tmp_path):
    with criterion("end-to-end synthetic benchmark (seed 7, 200 docs)"):
        start = time.perf_counter()

        # cosine threshold on raw embeddings
        cosine_cfg = _benchmark_config(benchmark_dir, tmp_path / "cosine",
                                       Method.COSINE)
        cosine_result = run_pipeline(cosine_cfg)
        assert cosine_result.report.conll_f1 >= 0.95, \
            f"cosine CoNLL {cosine_result.report.conll_f1:.4f}"

        # pair regressor with default training settings (50 epochs)
        regressor_cfg = _benchmark_config(benchmark_dir,
                                          tmp_path / "regressor",
                                          Method.REGRESSOR)
        regressor_result = run_pipeline(regressor_cfg)
        assert regressor_result.report.conll_f1 >= 0.90, \
            f"regressor CoNLL {regressor_result.report.conll_f1:.4f}"

        # trained transform strictly widens the dev cosine separation
        data = generate(SynthConfig(n_docs=200, dim=32, seed=7,
                                    sep_ratio=5.0))
        train_corpus, train_table = data["train"]
        dev_corpus, dev_table = data["dev"]
        train_pairs = []
        for doc in train_corpus:
            train_pairs.extend(labeled_pairs(doc, gold_clustering(doc),
                                             PairStrategy.ALL_PRECEDING))
        dev_pairs = []
        for doc in dev_corpus:
            dev_pairs.extend(labeled_pairs(doc, gold_clustering(doc),
                                           PairStrategy.ALL_PRECEDING))
        transform, _ = train_cosine_transform(train_pairs, train_table,
                                              TrainConfig(seed=7))
        before = compute_diagnostics(dev_pairs, dev_table)
        after = compute_diagnostics(dev_pairs, dev_table, transform)
        assert after.cos_delta > before.cos_delta, \
            f"cos_delta {before.cos_delta:.6f} -> {after.cos_delta:.6f}"

        elapsed = time.perf_counter() - start
        assert elapsed < 300.0, f"took {elapsed:.1f}s, budget 300s"


def test_determinism_byte_identical_runs(benchmark_dir, tmp_path):
    with criterion("byte-identical artifacts for identical config + seed"):
        blobs = []
        for tag in ("first", "second"):
            cfg = _benchmark_config(
                benchmark_dir, tmp_path / tag, Method.COSINE,
                train_corpus=str(benchmark_dir / "train.corpus.json"),
                train_embeddings=str(benchmark_dir / "train.emb.jsonl"),
                epochs=5)
            result = run_pipeline(cfg)
            snapshot = {}
            for name in ("report_json", "report_txt", "checkpoint",
                         "system_clusters", "threshold_trace",
                         "transform_trace", "decisions"):
                with open(result.files[name], "rb") as fh:
                    snapshot[name] = fh.read()
            blobs.append(snapshot)
        assert blobs[0] == blobs[1]
