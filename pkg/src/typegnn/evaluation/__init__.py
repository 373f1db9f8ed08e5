"""Metrics, the name-overlap baseline, ablations and the synthetic corpus generator."""

from typegnn.evaluation.ablation import (
    ABLATIONS,
    ablation_config,
    ablation_table,
    eval_seed,
    evaluate_baseline,
    evaluate_model,
    run_ablation,
)
from typegnn.evaluation.metrics import (
    DECLARATION,
    OCCURRENCE,
    EvalReport,
    MissingPrediction,
    Split,
    accuracy,
    evaluate_predictions,
    most_frequent_type,
    similar_name_baseline,
)
from typegnn.evaluation.synthetic import SyntheticSpec, generate_corpus, generate_project, write_corpus

__all__ = [
    "ABLATIONS", "DECLARATION", "OCCURRENCE", "EvalReport", "MissingPrediction", "Split", "SyntheticSpec",
    "ablation_config", "ablation_table", "accuracy", "eval_seed", "evaluate_baseline", "evaluate_model",
    "evaluate_predictions", "generate_corpus", "generate_project", "most_frequent_type", "run_ablation",
    "similar_name_baseline", "write_corpus",
]
