import math

import numpy as np
import pytest

from conftest import SMALL_SPEC, small_project
from typegnn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from typegnn.evaluation.synthetic import generate_corpus, write_corpus
from typegnn.gnn import ParameterStore
from typegnn.graph import TypeDependencyGraph, TypeNode, build_graph
from typegnn.predictor import CandidateSet
from typegnn.trainer import (
    LOG_COLUMNS,
    Corpus,
    CorpusError,
    NoAnnotations,
    Project,
    TrainConfig,
    derive_seed,
    evaluate_loss,
    labeled_targets,
    load_corpus,
    load_model,
    lr_at,
    median_batch_cap,
    project_loss,
    save_model,
    train,
)

LIB = ["number", "string", "boolean", "Tensor"]


def tiny_corpus(n_train=3, n_val=1):
    mk = lambda i: Project(build_graph(small_project(i)))  # noqa: E731
    return Corpus([mk(i) for i in range(n_train)], [mk(100 + i) for i in range(n_val)], [])


TINY = dict(dim=8, k=2, max_epochs=3, patience=10)


def test_lr_schedule():
    cfg = TrainConfig()
    assert lr_at(0, cfg) == pytest.approx(1e-3)
    assert lr_at(15, cfg) == pytest.approx(5.5e-4)
    assert lr_at(30, cfg) == pytest.approx(1e-4)
    assert lr_at(80, cfg) == pytest.approx(1e-4)


@pytest.mark.parametrize("bad", [dict(dim=0), dict(k=-1), dict(lr_end=1e-2), dict(weight_decay=-1.0),
                                 dict(monitor="acc"), dict(ablation="NoSuch"), dict(batch_cap=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        TrainConfig(**bad).validate()


def test_derive_seed():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert len({derive_seed(0, e, i) for e in range(10) for i in range(10)}) == 100


def test_uniform_scores_give_log_candidate_count(network_graph):
    p = ParameterStore(dim=8, k=2, lib_types=LIB, seed=0)
    last = max(int(k[len("predict/score/W"):]) for k in p.params if k.startswith("predict/score/W"))
    p[f"predict/score/W{last}"].data[:] = 0
    p[f"predict/score/b{last}"].data[:] = 0
    loss, n = project_loss(network_graph, p, TrainConfig(dim=8, k=2), run_seed=0)
    assert len(CandidateSet.for_graph(network_graph, LIB)) == 5
    assert float(loss.data) == pytest.approx(math.log(5), rel=1e-6)
    assert n == len(labeled_targets(network_graph, CandidateSet.for_graph(network_graph, LIB))[0])


def test_downsampling_to_batch_cap(network_graph):
    p = ParameterStore(dim=8, k=1, lib_types=LIB, seed=0)
    cfg = TrainConfig(dim=8, k=1)
    _, n = project_loss(network_graph, p, cfg, run_seed=0, batch_cap=2)
    assert n == 2
    _, full = project_loss(network_graph, p, cfg, run_seed=0, batch_cap=100)
    assert full > 2


def test_uncovered_types_are_skipped():
    g = TypeDependencyGraph([TypeNode(0, "variable"), TypeNode(1, "variable")], annotations={0: "number", 1: "Weird"})
    nodes, labels = labeled_targets(g, CandidateSet.for_graph(g, LIB))
    assert nodes.tolist() == [0] and labels.tolist() == [0]


def test_no_annotations():
    g = TypeDependencyGraph([TypeNode(0, "variable")], annotations={0: "Weird"})
    with pytest.raises(NoAnnotations):
        project_loss(g, ParameterStore(dim=8, k=1, lib_types=LIB), TrainConfig(dim=8, k=1), 0)


def test_corpus_validation():
    c = tiny_corpus(1, 0)
    c.val = [c.train[0]]
    with pytest.raises(CorpusError):
        c.validate()
    with pytest.raises(CorpusError):
        Corpus([Project(TypeDependencyGraph(project_id="e"))]).validate()


def test_median_batch_cap():
    c = tiny_corpus()
    counts = sorted(len([n for n in p.graph.annotations if n not in p.graph.user_types.values()]) for p in c.train)
    assert median_batch_cap(c) == counts[1]


def test_training_reduces_loss_and_logs():
    res = train(tiny_corpus(), TrainConfig(**TINY))
    assert [r["epoch"] for r in res.log] == [0, 1, 2]
    assert set(res.log[0]) == set(LOG_COLUMNS)
    assert res.log[-1]["train_loss"] < res.log[0]["train_loss"]


def test_training_is_deterministic():
    a = train(tiny_corpus(), TrainConfig(**TINY, deterministic=True))
    b = train(tiny_corpus(), TrainConfig(**TINY, deterministic=True))
    assert a.log == b.log
    assert all(np.array_equal(v, b.store.arrays()[k]) for k, v in a.store.arrays().items())


def test_early_stopping_respects_patience():
    res = train(tiny_corpus(), TrainConfig(dim=8, k=1, max_epochs=50, patience=1, lr_start=0.5, lr_end=0.5))
    assert len(res.log) < 50
    assert len(res.log) - 1 - res.best_epoch <= 1


def test_resume_matches_uninterrupted(tmp_path):
    full = train(tiny_corpus(), TrainConfig(**{**TINY, "max_epochs": 4}, deterministic=True))
    out = tmp_path / "m.ckpt"
    train(tiny_corpus(), TrainConfig(**{**TINY, "max_epochs": 2}, deterministic=True), out_path=out)
    resumed = train(tiny_corpus(), TrainConfig(**{**TINY, "max_epochs": 4}, deterministic=True), out_path=out,
                    log_path=tmp_path / "log.csv", resume=True)
    assert resumed.log == full.log
    assert all(np.array_equal(v, resumed.store.arrays()[k]) for k, v in full.store.arrays().items())
    assert (tmp_path / "log.csv").read_text().count("\n") == 5


def test_model_round_trip(tmp_path):
    c = tiny_corpus()
    cfg = TrainConfig(**TINY)
    res = train(c, cfg, out_path=tmp_path / "m.ckpt")
    store, cfg2, meta = load_model(tmp_path / "m.ckpt")
    assert cfg2 == cfg and meta["best_epoch"] == res.best_epoch
    assert all(np.array_equal(v, store.arrays()[k]) for k, v in res.store.arrays().items())
    assert evaluate_loss(c.val, store, cfg2, 0) == evaluate_loss(c.val, res.store, cfg, 0)


def test_load_model_errors(tmp_path):
    with pytest.raises(CheckpointError):
        load_model(tmp_path / "missing.ckpt")
    p = ParameterStore(dim=8, k=1)
    save_model(tmp_path / "m.ckpt", p, TrainConfig(dim=8, k=1), 3)
    arrays, seed, meta = load_checkpoint(tmp_path / "m.ckpt")
    meta["manifest_version"] = 99
    save_checkpoint(tmp_path / "m.ckpt", arrays, seed, meta)
    with pytest.raises(CheckpointError):
        load_model(tmp_path / "m.ckpt")


def test_load_corpus_caches_graphs(tmp_path):
    spec = SMALL_SPEC.__class__(**{**SMALL_SPEC.__dict__, "train": 2, "val": 1, "test": 1})
    write_corpus(generate_corpus(spec, 0), tmp_path)
    c1 = load_corpus(tmp_path)
    cache = sorted((tmp_path / "train").iterdir())[0] / "graph.json"
    assert cache.exists()
    c2 = load_corpus(tmp_path)
    assert c1.train[0].graph.to_json() == c2.train[0].graph.to_json()
    # editing a source invalidates the cache
    src = sorted(p for p in cache.parent.iterdir() if p.suffix == ".ts")[0]
    src.write_text(src.read_text() + "\nlet extraCount: number = 3;\n")
    c3 = load_corpus(tmp_path)
    assert c3.train[0].graph.num_nodes > c1.train[0].graph.num_nodes


def test_load_corpus_missing_dir(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "nope")
