import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SMALL_SPEC, small_project
from typegnn.evaluation import (
    ablation_config,
    ablation_table,
    evaluate_baseline,
    evaluate_model,
)
from typegnn.evaluation.metrics import (
    DECLARATION,
    OCCURRENCE,
    EvalReport,
    MissingPrediction,
    accuracy,
    evaluate_predictions,
    most_frequent_type,
    similar_name_baseline,
)
from typegnn.evaluation.synthetic import SyntheticSpec, generate_corpus, generate_project
from typegnn.graph import Hyperedge, TypeDependencyGraph, TypeNode, build_graph
from typegnn.predictor import CandidateSet, NodePrediction, build_lib_types
from typegnn.trainer import Corpus, Project, TrainConfig, train


def pred(node, names):
    return NodePrediction(node, list(names), [1.0 / len(names)] * len(names))


# -- accuracy

def test_declaration_vs_occurrence_example():
    preds = {0: pred(0, ["number", "string"]), 1: pred(1, ["number", "string"])}
    truth = {0: "number", 1: "string"}
    occ = {0: 3, 1: 1}
    assert accuracy(preds, truth, occ, DECLARATION)["overall"].acc == 0.5
    assert accuracy(preds, truth, occ, OCCURRENCE)["overall"].acc == 0.75
    assert accuracy(preds, truth, occ, DECLARATION, n=2)["overall"].acc == 1.0


def test_user_lib_split():
    preds = {0: pred(0, ["Foo", "number"]), 1: pred(1, ["Foo", "number"])}
    cells = accuracy(preds, {0: "Foo", 1: "number"}, user_types={"Foo"})
    assert (cells["user"].acc, cells["lib"].acc, cells["overall"].acc) == (1.0, 0.0, 0.5)


def test_missing_prediction_and_bad_level():
    with pytest.raises(MissingPrediction):
        accuracy({}, {3: "number"})
    with pytest.raises(ValueError):
        accuracy({}, {}, level="token")


def test_empty_truth_is_zero():
    assert accuracy({}, {})["overall"].acc == 0.0


ranked = st.lists(st.sampled_from(["a", "b", "c", "d", "e", "f"]), min_size=6, max_size=6, unique=True)


@settings(max_examples=100)
@given(st.lists(st.tuples(ranked, st.sampled_from("abcdef"), st.integers(1, 5)), min_size=1, max_size=10))
def test_accuracy_bounded_and_monotone_in_n(rows):
    preds = {i: pred(i, r) for i, (r, _, _) in enumerate(rows)}
    truth = {i: t for i, (_, t, _) in enumerate(rows)}
    occ = {i: o for i, (_, _, o) in enumerate(rows)}
    for level in (DECLARATION, OCCURRENCE):
        accs = [accuracy(preds, truth, occ, level, n)["overall"].acc for n in range(1, 7)]
        assert all(0.0 <= a <= 1.0 for a in accs)
        assert all(a <= b for a, b in zip(accs, accs[1:]))
        assert accs[-1] == 1.0


@settings(max_examples=100)
@given(st.lists(st.tuples(ranked, st.sampled_from("abcdef")), min_size=1, max_size=10))
def test_occurrence_equals_declaration_with_unit_counts(rows):
    preds = {i: pred(i, r) for i, (r, _) in enumerate(rows)}
    truth = {i: t for i, (_, t) in enumerate(rows)}
    assert accuracy(preds, truth, {}, OCCURRENCE)["overall"].acc == accuracy(preds, truth)["overall"].acc


def test_report_merge_and_json():
    a, b = EvalReport(), EvalReport()
    a.cells[(DECLARATION, 1)] = accuracy({0: pred(0, ["x"])}, {0: "x"})
    b.cells[(DECLARATION, 1)] = accuracy({0: pred(0, ["x", "y"])}, {0: "y"})
    a.merge(b)
    assert a.acc() == 0.5 and a.count() == 2
    blob = json.loads(json.dumps(a.to_json()))
    assert blob["declaration/top1"]["overall"]["hits"] == 1.0
    assert "declaration" in a.table("t")


# -- baseline

def test_most_frequent_type_ties_by_name():
    g = TypeDependencyGraph(annotations={0: "string", 1: "boolean", 2: "string", 3: "boolean"})
    assert most_frequent_type([g]) == "boolean"
    assert most_frequent_type([]) == "number"


def named_graph(names, annotations, user_types):
    nodes = [TypeNode(i, "variable", tokens=tuple(t), name="".join(t)) for i, t in enumerate(names)]
    return TypeDependencyGraph(nodes, [], user_types, annotations)


def test_baseline_picks_overlapping_type():
    g = named_graph([("my", "network"), ("count",), ("network",)], {0: "MyNetwork", 1: "number"},
                    {"MyNetwork": 2})
    cands = CandidateSet.for_graph(g, ["number", "string"])
    res = similar_name_baseline(g, cands, fallback="string")
    assert res.rows[0].names[0] == "MyNetwork"
    assert res.rows[1].names == ["string", "MyNetwork", "number"]  # no overlap: fallback, then by name


def test_baseline_ties_break_by_name():
    g = named_graph([("fast", "tree"), ("x",), ("x",)], {0: "number"}, {"TreeFast": 1, "FastTree": 2})
    res = similar_name_baseline(g, CandidateSet.for_graph(g, ["number"]), "number")
    assert res.rows[0].names[:2] == ["FastTree", "TreeFast"]


def test_baseline_return_slot_uses_function_name():
    nodes = [TypeNode(0, "variable", tokens=("load", "record"), name="loadRecord", role="function"),
             TypeNode(1, "variable", name="loadRecord", role="return"), TypeNode(2, "variable", tokens=("record",))]
    g = TypeDependencyGraph(nodes, [Hyperedge("Function", (0, 1), (0,))], {"Record": 2}, {1: "Record"})
    res = similar_name_baseline(g, CandidateSet.for_graph(g, ["number"]), "number")
    assert res.rows[1].names[0] == "Record"


def test_baseline_on_network(network_graph):
    res = similar_name_baseline(network_graph, CandidateSet.for_graph(network_graph, ["number", "string"]), "number")
    assert res.rows[5].names[0] == "MyNetwork"
    assert res.rows[1].names[0] == "number"


# -- synthetic corpus

def test_corpus_is_deterministic():
    spec = SyntheticSpec(train=2, val=1, test=1)
    a, b = generate_corpus(spec, 5), generate_corpus(spec, 5)
    assert [p.files for s in a.values() for p in s] == [p.files for s in b.values() for p in s]
    c = generate_corpus(spec, 6)
    assert [p.files for p in a["train"]] != [p.files for p in c["train"]]


def test_corpus_split_sizes_and_ids():
    c = generate_corpus(SyntheticSpec(train=3, val=2, test=1), 0)
    assert {k: len(v) for k, v in c.items()} == {"train": 3, "val": 2, "test": 1}
    assert c["val"][1].project_id == "val001"


@pytest.mark.parametrize("seed", range(8))
def test_generated_projects_extract_with_usage_edges(seed):
    g = build_graph(generate_project(SyntheticSpec(), seed, f"p{seed}"))
    g.validate()
    assert g.annotations and g.user_types
    assert g.edge_counts()["Usage"] > 0 and g.edge_counts()["Subtype"] > 0
    assert any(t in g.user_types for t in g.annotations.values())


@pytest.mark.parametrize("bad", [dict(name_correlation=1.5), dict(classes_per_project=(0, 2)),
                                 dict(fields_per_class=(3, 1)), dict(lib_pool=("number", "Widget"))])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        SyntheticSpec(**bad).validate()


def _baseline_top1(corr):
    spec = SyntheticSpec(**{**SMALL_SPEC.__dict__, "name_correlation": corr, "train": 4, "val": 0, "test": 6})
    c = generate_corpus(spec, 1)
    corpus = Corpus([Project(build_graph(p)) for p in c["train"]], [], [Project(build_graph(p)) for p in c["test"]])
    lib = build_lib_types([p.graph for p in corpus.train])
    return evaluate_baseline(corpus, corpus.test, lib).acc()


def test_name_correlation_drives_baseline():
    assert _baseline_top1(1.0) > _baseline_top1(0.0) + 0.2


# -- model evaluation and ablation plumbing

def test_ablation_config():
    base = TrainConfig(k=6, seed=3)
    assert ablation_config(base, "K=2").k == 2 and ablation_config(base, 0).k == 0
    assert ablation_config(base, "NoLogical").ablation == "NoLogical"
    assert ablation_config(base, "full").ablation is None
    assert ablation_config(base, "K=1").seed == 3
    with pytest.raises(ValueError):
        ablation_config(base, "NoSuch")


def test_evaluate_model_per_project():
    mk = lambda i: Project(build_graph(small_project(i)))  # noqa: E731
    corpus = Corpus([mk(0), mk(1)], [mk(2)], [mk(3), mk(4)])
    cfg = TrainConfig(dim=8, k=1, max_epochs=1)
    res = train(corpus, cfg)
    rep = evaluate_model(corpus.test, res.store, cfg)
    assert sorted(rep.per_project) == ["p3", "p4"]
    assert rep.count() == sum(r.count() for r in rep.per_project.values())
    assert rep.acc("overall", 5) >= rep.acc("overall", 1)
    table = ablation_table({"full": rep})
    assert table.splitlines()[1].startswith("full")


def test_evaluate_predictions_counts_every_target(network_graph):
    from typegnn.gnn import ParameterStore
    from typegnn.predictor import predict, prediction_targets
    p = ParameterStore(dim=8, k=1, lib_types=["number", "string", "Tensor"])
    rep = evaluate_predictions(network_graph, predict(network_graph, p))
    assert rep.count() == len(prediction_targets(network_graph))
    occ = sum(network_graph.occurrences.get(int(n), 1) for n in prediction_targets(network_graph))
    assert rep.count(level=OCCURRENCE) == occ
    assert rep.acc("overall", 5) >= rep.acc("overall", 1)
