"""Top-n accuracy at declaration and occurrence level, and the name-overlap baseline."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from typegnn.graph import TypeDependencyGraph, tokenize_identifier
from typegnn.predictor import CandidateSet, NodePrediction, PredictionResult, prediction_targets

DECLARATION, OCCURRENCE = "declaration", "occurrence"


class MissingPrediction(KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"no prediction for node {node}")


@dataclass
class Split:
    hits: float = 0.0
    total: float = 0.0

    @property
    def acc(self) -> float:
        return self.hits / self.total if self.total else 0.0

    def add(self, other: "Split"):
        self.hits += other.hits
        self.total += other.total


@dataclass
class EvalReport:
    """Accuracy per (level, top-n) for user, library and all annotations."""
    cells: dict = field(default_factory=dict)  # (level, n) -> {"user": Split, "lib": Split, "overall": Split}
    per_project: dict = field(default_factory=dict)  # project_id -> EvalReport

    def acc(self, split: str = "overall", n: int = 1, level: str = DECLARATION) -> float:
        return self.cells[(level, n)][split].acc

    def count(self, split: str = "overall", level: str = DECLARATION) -> float:
        key = next(k for k in self.cells if k[0] == level)
        return self.cells[key][split].total

    def merge(self, other: "EvalReport"):
        for key, splits in other.cells.items():
            mine = self.cells.setdefault(key, {s: Split() for s in splits})
            for s, v in splits.items():
                mine[s].add(v)

    def to_json(self) -> dict:
        out = {}
        for (level, n), splits in sorted(self.cells.items()):
            out[f"{level}/top{n}"] = {s: {"acc": v.acc, "hits": v.hits, "total": v.total} for s, v in splits.items()}
        if self.per_project:
            out["per_project"] = {k: v.to_json() for k, v in sorted(self.per_project.items())}
        return out

    def table(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"{'level':<12}{'n':>4}{'user':>9}{'lib':>9}{'overall':>9}")
        for (level, n), s in sorted(self.cells.items()):
            lines.append(f"{level:<12}{n:>4}{100 * s['user'].acc:>9.1f}{100 * s['lib'].acc:>9.1f}"
                         f"{100 * s['overall'].acc:>9.1f}")
        return "\n".join(lines)


def accuracy(preds: dict[int, NodePrediction], truth: dict[int, str], occurrences: Optional[dict] = None,
             level: str = DECLARATION, n: int = 1, user_types=()) -> dict[str, Split]:
    """Hit counts for one (level, n) cell, split by user and library truth types."""
    if level not in (DECLARATION, OCCURRENCE):
        raise ValueError(f"unknown level {level!r}")
    user_types = set(user_types)
    out = {"user": Split(), "lib": Split(), "overall": Split()}
    for node, ty in truth.items():
        if node not in preds:
            raise MissingPrediction(node)
        weight = 1.0 if level == DECLARATION else float((occurrences or {}).get(node, 1))
        hit = weight if ty in preds[node].names[:n] else 0.0
        for s in ("user" if ty in user_types else "lib", "overall"):
            out[s].hits += hit
            out[s].total += weight
    return out


def evaluate_predictions(g: TypeDependencyGraph, result: PredictionResult, ns=(1, 5)) -> EvalReport:
    truth = {int(n): g.annotations[int(n)] for n in prediction_targets(g)}
    rep = EvalReport()
    for level in (DECLARATION, OCCURRENCE):
        for n in ns:
            rep.cells[(level, n)] = accuracy(result.rows, truth, g.occurrences, level, n, g.user_types)
    return rep


def most_frequent_type(graphs) -> str:
    counts = Counter(t for g in graphs for t in g.annotations.values())
    if not counts:
        return "number"
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def _enclosing_function_tokens(g: TypeDependencyGraph) -> dict[int, tuple]:
    """Return-slot nodes borrow the name of the function they belong to."""
    out = {}
    for e in g.edges:
        if e.kind == "Function":
            head = g.nodes[e.args[0]]
            out[e.args[-1]] = head.tokens
    return out


def similar_name_baseline(g: TypeDependencyGraph, cands: CandidateSet, fallback: str) -> PredictionResult:
    """Rank candidates by shared name tokens, ties broken by type name; no overlap means fallback first."""
    type_tokens = {c: set(tokenize_identifier(c)) for c in cands.names}
    ret_tokens = _enclosing_function_tokens(g)
    rows = {}
    for nid in prediction_targets(g):
        nid = int(nid)
        toks = set(g.nodes[nid].tokens or ret_tokens.get(nid, ()))
        overlap = {c: len(toks & type_tokens[c]) for c in cands.names}
        if max(overlap.values(), default=0) == 0:
            ranked = sorted(cands.names, key=lambda c: (c != fallback, c))
        else:
            ranked = sorted(cands.names, key=lambda c: (-overlap[c], c))
        probs = np.zeros(len(ranked))
        probs[0] = 1.0
        rows[nid] = NodePrediction(nid, ranked, [float(x) for x in probs])
    return PredictionResult(g.project_id, rows, cands)
