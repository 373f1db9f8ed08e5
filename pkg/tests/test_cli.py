import json

import pytest

from conftest import NETWORK
from typegnn.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, main

FAST = ["--k", "1", "--dim", "8", "--max-epochs", "2", "--deterministic"]


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["gen-corpus", str(d), "--train", "2", "--val", "1", "--test", "2", "--seed", "3"]) == EXIT_OK
    return d


@pytest.fixture(scope="module")
def checkpoint(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "m.ckpt"
    assert main(["train", str(corpus_dir), str(out)] + FAST) == EXIT_OK
    return out


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["train", "x"]) == EXIT_USAGE
    assert main(["extract-graph", "a", "b", "--bogus"]) == EXIT_USAGE
    assert main(["train", "a", "b", "--monitor", "acc"]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_OK


def test_extract_graph_network(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["extract-graph", str(NETWORK), str(out)]) == EXIT_OK
    g = json.loads(out.read_text())
    assert any(e["kind"] == "Subtype" and e["args"] == [12, 4] for e in g["edges"])
    printed = capsys.readouterr()
    assert "nodes: 23" in printed.out and "Usage: 2" in printed.out
    assert printed.err.startswith("config: ")


def test_extract_graph_empty_project(tmp_path, capsys):
    (tmp_path / "src").mkdir()
    assert main(["extract-graph", str(tmp_path / "src"), str(tmp_path / "g.json")]) == EXIT_OK
    assert json.loads((tmp_path / "g.json").read_text())["edges"] == []


def test_extract_graph_syntax_error(tmp_path, capsys):
    (tmp_path / "src").mkdir()
    (tmp_path / "src" / "bad.ts").write_text("let x: number = ;\n")
    assert main(["extract-graph", str(tmp_path / "src"), str(tmp_path / "g.json")]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "SyntaxError" in err and "bad.ts" in err


def test_gen_corpus_layout(corpus_dir):
    assert sorted(p.name for p in (corpus_dir / "test").iterdir()) == ["test000", "test001"]
    assert list((corpus_dir / "train" / "train000").glob("*.ts"))


def test_train_writes_log_and_resume_state(checkpoint):
    log = open(str(checkpoint) + ".log.csv").read().splitlines()
    assert log[0] == "epoch,train_loss,val_loss,val_top1,lr,wall_time" and len(log) == 3
    assert log[1].endswith(",0.000")
    assert (checkpoint.parent / "m.ckpt.resume").exists()


def test_train_bad_ablation(corpus_dir, tmp_path):
    assert main(["train", str(corpus_dir), str(tmp_path / "m"), "--ablation", "NoSuch"]) == EXIT_INPUT


def test_train_missing_corpus(tmp_path):
    assert main(["train", str(tmp_path / "none"), str(tmp_path / "m")] + FAST) == EXIT_INPUT


def test_predict_top1_is_prefix_of_top5(checkpoint, corpus_dir, tmp_path):
    proj = corpus_dir / "test" / "test000"
    out1, out5 = tmp_path / "p1.json", tmp_path / "p5.json"
    assert main(["predict", str(checkpoint), str(proj), "--top-n", "1", "--out", str(out1)]) == EXIT_OK
    assert main(["predict", str(checkpoint), str(proj), "--top-n", "5", "--out", str(out5)]) == EXIT_OK
    p1, p5 = json.loads(out1.read_text()), json.loads(out5.read_text())
    assert [r["node_id"] for r in p1] == [r["node_id"] for r in p5]
    for a, b in zip(p1, p5):
        assert len(a["topk"]) == 1 and len(b["topk"]) == 5 and a["topk"][0] == b["topk"][0]
        assert b["variable_name"] and b["source_span"]


def test_predict_errors(checkpoint, tmp_path):
    assert main(["predict", str(tmp_path / "missing.ckpt"), str(NETWORK)]) == EXIT_INPUT
    assert main(["predict", str(checkpoint), str(NETWORK), "--top-n", "0"]) == EXIT_USAGE
    (tmp_path / "junk.ckpt").write_bytes(b"junk")
    assert main(["predict", str(tmp_path / "junk.ckpt"), str(NETWORK)]) == EXIT_INPUT


def test_evaluate_report(checkpoint, corpus_dir, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["evaluate", str(checkpoint), str(corpus_dir), "--baseline", "--json", str(out)]) == EXIT_OK
    blob = json.loads(out.read_text())
    assert set(blob) == {"model", "similar_name"}
    assert 0.0 <= blob["model"]["declaration/top1"]["overall"]["acc"] <= 1.0
    text = capsys.readouterr().out
    assert "model (test)" in text and "SimilarName" in text


def test_ablate_rows(corpus_dir, tmp_path, capsys):
    out = tmp_path / "a.json"
    assert main(["ablate", str(corpus_dir), "--variants", "K=0,full", "--json", str(out)] + FAST) == EXIT_OK
    assert sorted(json.loads(out.read_text())) == ["K=0", "full"]
    assert "variant" in capsys.readouterr().out


def test_deterministic_train_is_byte_identical(corpus_dir, tmp_path):
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    for out in (a, b):
        assert main(["train", str(corpus_dir), str(out), "--seed", "7"] + FAST) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert open(str(a) + ".log.csv").read() == open(str(b) + ".log.csv").read()
