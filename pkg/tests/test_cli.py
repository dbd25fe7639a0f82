import json
import os

import pytest

from evlink.cli import main


@pytest.fixture(scope="module")
def synth_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_synth")
    code = main(["synth", "--out", str(out), "--docs", "24", "--dim", "16",
                 "--seed", "4"])
    assert code == 0
    return out


def write_config(path, synth_out, extra=""):
    path.write_text(f"""
method = cosine
train_corpus = {synth_out}/train.corpus.json
dev_corpus = {synth_out}/dev.corpus.json
test_corpus = {synth_out}/test.corpus.json
train_embeddings = {synth_out}/train.emb.jsonl
dev_embeddings = {synth_out}/dev.emb.jsonl
test_embeddings = {synth_out}/test.emb.jsonl
epochs = 3
lr = 0.001
seed = 4
{extra}
""", encoding="utf-8")
    return path


def test_synth_writes_all_splits(synth_out):
    for split in ("train", "dev", "test"):
        assert os.path.exists(synth_out / f"{split}.corpus.json")
        assert os.path.exists(synth_out / f"{split}.emb.jsonl")


def test_validate_success(synth_out, capsys):
    code = main(["validate", "--corpus", str(synth_out / "test.corpus.json"),
                 "--embeddings", str(synth_out / "test.emb.jsonl")])
    assert code == 0
    assert "coverage: complete" in capsys.readouterr().out


def test_validate_coverage_failure(synth_out, tmp_path, capsys):
    lines = (synth_out / "test.emb.jsonl").read_text().splitlines()
    bad = tmp_path / "short.emb.jsonl"
    bad.write_text("\n".join(lines[:-1]) + "\n")
    code = main(["validate", "--corpus", str(synth_out / "test.corpus.json"),
                 "--embeddings", str(bad)])
    assert code == 1
    assert "COVERAGE FAILURE" in capsys.readouterr().out


def test_validate_malformed_corpus_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["validate", "--corpus", str(bad)])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_pairs_dump(synth_out, tmp_path):
    out = tmp_path / "pairs.jsonl"
    code = main(["pairs", "--corpus", str(synth_out / "test.corpus.json"),
                 "--strategy", "all_preceding", "--out", str(out)])
    assert code == 0
    records = [json.loads(l) for l in out.read_text().splitlines()]
    assert records
    assert set(records[0]) == {"first", "second", "label"}


def test_full_cli_workflow(synth_out, tmp_path, capsys):
    """train-cosine -> tune-threshold -> predict -> cluster -> score."""
    cfg = write_config(tmp_path / "cosine.cfg", synth_out)
    run_dir = tmp_path / "workflow"

    assert main(["train-cosine", "--config", str(cfg), "--out",
                 str(run_dir)]) == 0
    transform = run_dir / "cosine_transform.json"
    assert transform.exists()

    assert main(["tune-threshold", "--config", str(cfg), "--transform",
                 str(transform), "--out", str(run_dir)]) == 0
    cosine_model = run_dir / "cosine_model.json"
    assert cosine_model.exists()

    decisions = run_dir / "decisions.jsonl"
    assert main(["predict", "--corpus", str(synth_out / "test.corpus.json"),
                 "--embeddings", str(synth_out / "test.emb.jsonl"),
                 "--method", "cosine", "--checkpoint", str(cosine_model),
                 "--out", str(decisions)]) == 0

    clusters = run_dir / "system.jsonl"
    assert main(["cluster", "--corpus", str(synth_out / "test.corpus.json"),
                 "--decisions", str(decisions), "--out", str(clusters)]) == 0

    report = run_dir / "report.json"
    assert main(["score", "--gold", str(synth_out / "test.corpus.json"),
                 "--system", str(clusters), "--mode", "micro",
                 "--out", str(report)]) == 0
    out = capsys.readouterr().out
    assert "CoNLL" in out
    payload = json.loads(report.read_text())
    assert set(payload) >= {"b3", "muc", "ceaf_e", "blanc", "conll_f1",
                            "mode", "per_doc"}
    assert payload["conll_f1"] > 0.5

    assert main(["report", "--report", str(report)]) == 0
    assert "B3" in capsys.readouterr().out


def test_run_subcommand(synth_out, tmp_path, capsys):
    cfg = write_config(tmp_path / "run.cfg", synth_out)
    code = main(["run", "--config", str(cfg), "--out",
                 str(tmp_path / "run_out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "tuned threshold" in out
    assert os.path.exists(tmp_path / "run_out" / "report.json")


def test_diagnostics_json(synth_out, capsys):
    code = main(["diagnostics", "--corpus",
                 str(synth_out / "dev.corpus.json"),
                 "--embeddings", str(synth_out / "dev.emb.jsonl")])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["cos_delta"] == pytest.approx(
        payload["cos_plus"] - payload["cos_minus"])
    assert payload["n_positive"] > 0


def test_score_rejects_missing_document(synth_out, tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code = main(["score", "--gold", str(synth_out / "test.corpus.json"),
                 "--system", str(empty)])
    assert code == 1
