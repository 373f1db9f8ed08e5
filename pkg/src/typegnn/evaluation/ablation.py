"""Model evaluation on a corpus split and single-toggle ablation runs."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from typegnn.evaluation.metrics import EvalReport, evaluate_predictions, most_frequent_type, similar_name_baseline
from typegnn.gnn import ParameterStore
from typegnn.predictor import CandidateSet, predict
from typegnn.trainer import Corpus, TrainConfig, TrainResult, derive_seed, train

ABLATIONS = ("NoContextual", "NoLogical", "NoNPairAttention", "SimpleAggregation")


def eval_seed(cfg: TrainConfig) -> int:
    """Run seed for the unknown-token buckets, frozen for every evaluation of a run."""
    return derive_seed(cfg.seed, 1 << 30)


def evaluate_model(projects, store: ParameterStore, cfg: TrainConfig) -> EvalReport:
    rep = EvalReport()
    for proj in projects:
        g = proj.graph
        res = predict(g, store, k=cfg.k, run_seed=eval_seed(cfg), opts=cfg.options, lib_only=cfg.lib_only)
        one = evaluate_predictions(g, res)
        rep.per_project[g.project_id] = one
        rep.merge(one)
    return rep


def evaluate_baseline(corpus: Corpus, projects, lib_types, lib_only: bool = False) -> EvalReport:
    fallback = most_frequent_type([p.graph for p in corpus.train])
    rep = EvalReport()
    for proj in projects:
        g = proj.graph
        res = similar_name_baseline(g, CandidateSet.for_graph(g, lib_types, lib_only), fallback)
        one = evaluate_predictions(g, res)
        rep.per_project[g.project_id] = one
        rep.merge(one)
    return rep


def ablation_config(base: TrainConfig, ablation) -> TrainConfig:
    """The base config with exactly one change: an ablation name or a K value."""
    if isinstance(ablation, int) or (isinstance(ablation, str) and ablation.startswith("K=")):
        k = ablation if isinstance(ablation, int) else int(ablation[2:])
        return replace(base, k=k, ablation=None)
    if ablation in (None, "full", "none"):
        return replace(base, ablation=None)
    if ablation not in ABLATIONS:
        raise ValueError(f"unknown ablation {ablation!r}")
    return replace(base, ablation=ablation)


def run_ablation(corpus: Corpus, base: TrainConfig, ablation, split: str = "test",
                 trained: Optional[TrainResult] = None) -> tuple[EvalReport, TrainResult]:
    """Train (unless ``trained`` is given) and evaluate one ablation row on ``split``."""
    cfg = ablation_config(base, ablation)
    result = trained or train(corpus, cfg)
    return evaluate_model(getattr(corpus, split), result.store, cfg), result


def ablation_table(rows: dict[str, EvalReport]) -> str:
    lines = [f"{'variant':<20}{'user@1':>9}{'lib@1':>9}{'all@1':>9}{'all@5':>9}"]
    for name, rep in rows.items():
        lines.append(f"{name:<20}{100 * rep.acc('user'):>9.1f}{100 * rep.acc('lib'):>9.1f}"
                     f"{100 * rep.acc('overall'):>9.1f}{100 * rep.acc('overall', 5):>9.1f}")
    return "\n".join(lines)
