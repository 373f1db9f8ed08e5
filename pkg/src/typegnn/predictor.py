"""Pointer-style type prediction over library types plus the project's own classes."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from typegnn import tensor as T
from typegnn.gnn import LEAKY_SLOPE, GnnOptions, ParameterStore, run_gnn
from typegnn.graph import TypeDependencyGraph


class EmptyCandidateSet(ValueError):
    pass


@dataclass
class CandidateSet:
    lib_types: list[tuple[str, int]]  # (name, row of the library-type table)
    user_types: list[tuple[str, int]]  # (name, graph node id)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.lib_types] + [n for n, _ in self.user_types]

    def __len__(self):
        return len(self.lib_types) + len(self.user_types)

    def is_user(self, name: str) -> bool:
        return any(n == name for n, _ in self.user_types)

    @classmethod
    def for_graph(cls, g: TypeDependencyGraph, lib_types, lib_only: bool = False) -> "CandidateSet":
        """Library list minus names a project class shadows, then the project classes in node order."""
        user = [] if lib_only else sorted(g.user_types.items(), key=lambda kv: kv[1])
        shadowed = {n for n, _ in user}
        lib = [(n, i) for i, n in enumerate(lib_types) if n not in shadowed]
        return cls(lib, user)


def build_lib_types(graphs, top: int = 100) -> list[str]:
    """Most frequent non-project annotation types, ties broken lexicographically."""
    counts: Counter = Counter()
    for g in graphs:
        for t in g.annotations.values():
            if t not in g.user_types:
                counts[t] += 1
    return [t for t, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top]]


def score(v_n: T.Tensor, u_c: T.Tensor, p: ParameterStore) -> T.Tensor:
    """Compatibility score of one node vector against one type vector."""
    for name, v in (("score v_n", v_n), ("score u_c", u_c)):
        if v.shape != (p.dim,):
            raise T.ShapeMismatch(name, v.shape, (p.dim,))
    x = T.reshape(T.concat([v_n, u_c], axis=0), (1, 2 * p.dim))
    return T.reshape(p.mlp("predict/score", x), ())


def score_matrix(V: T.Tensor, nodes: np.ndarray, cands: CandidateSet, p: ParameterStore) -> T.Tensor:
    """Scores for every (node, candidate) pair, shape (len(nodes), len(cands)).

    Equal to ``score`` applied pairwise; the first layer is split so each
    side is projected once instead of once per pair.
    """
    if len(cands) == 0:
        raise EmptyCandidateSet("no candidate types")
    d = p.dim
    parts = []
    if cands.lib_types:
        parts.append(T.gather(p["embed/lib_types"], np.array([r for _, r in cands.lib_types], dtype=np.int64)))
    if cands.user_types:
        parts.append(T.gather(V, np.array([nid for _, nid in cands.user_types], dtype=np.int64)))
    U = parts[0] if len(parts) == 1 else T.concat(parts, axis=0)
    n, c = len(nodes), len(cands)
    W0 = p["predict/score/W0"]
    left = T.matmul(T.gather(V, nodes), T.gather(W0, np.arange(d)))
    right = T.matmul(U, T.gather(W0, np.arange(d, 2 * d)))
    h = T.add(T.add(T.gather(left, np.repeat(np.arange(n), c)), T.gather(right, np.tile(np.arange(c), n))),
              p["predict/score/b0"])
    i = 1
    while f"predict/score/W{i}" in p:
        h = T.leaky_relu(h, LEAKY_SLOPE)
        h = T.add(T.matmul(h, p[f"predict/score/W{i}"]), p[f"predict/score/b{i}"])
        i += 1
    return T.reshape(h, (n, c))


@dataclass
class NodePrediction:
    node_id: int
    names: list[str]  # candidates in ranked order
    probs: list[float]  # matching probabilities

    def topk(self, n: int) -> list[tuple[str, float]]:
        return list(zip(self.names[:n], self.probs[:n]))

    def rank_of(self, name: str) -> Optional[int]:
        try:
            return self.names.index(name)
        except ValueError:
            return None


def rank_distribution(probs: np.ndarray, names: list[str], node_id: int) -> NodePrediction:
    order = np.argsort(-probs, kind="stable")  # stable sort keeps candidate order on ties
    return NodePrediction(node_id, [names[i] for i in order], [float(probs[i]) for i in order])


@dataclass
class PredictionResult:
    project_id: str
    rows: dict[int, NodePrediction]
    candidates: CandidateSet

    def to_json(self, g: TypeDependencyGraph, top_n: int = 5) -> list[dict]:
        out = []
        for nid in sorted(self.rows):
            node = g.nodes[nid]
            out.append({"node_id": nid, "source_span": node.span, "variable_name": node.name,
                        "topk": [{"type": t, "prob": pr} for t, pr in self.rows[nid].topk(top_n)]})
        return out


def prediction_targets(g: TypeDependencyGraph) -> np.ndarray:
    """Annotated nodes, excluding the defining nodes of project classes."""
    class_nodes = set(g.user_types.values())
    return np.array(sorted(n for n in g.annotations if n not in class_nodes), dtype=np.int64)


def predict_distribution(node: int, cands: CandidateSet, V: T.Tensor, p: ParameterStore) -> NodePrediction:
    logits = score_matrix(V, np.array([node], dtype=np.int64), cands, p)
    probs = T.softmax(logits).data[0].astype(np.float64)
    return rank_distribution(probs, cands.names, node)


def predict(g: TypeDependencyGraph, p: ParameterStore, k: Optional[int] = None, run_seed: int = 0,
            opts: Optional[GnnOptions] = None, lib_only: bool = False, nodes=None) -> PredictionResult:
    cands = CandidateSet.for_graph(g, p.lib_types, lib_only)
    nodes = prediction_targets(g) if nodes is None else np.asarray(nodes, dtype=np.int64)
    rows = {}
    if nodes.size:
        V = run_gnn(g, p, k=k, run_seed=run_seed, opts=opts).vectors
        probs = T.softmax(score_matrix(V, nodes, cands, p)).data.astype(np.float64)
        names = cands.names
        for i, nid in enumerate(nodes):
            rows[int(nid)] = rank_distribution(probs[i], names, int(nid))
    return PredictionResult(g.project_id, rows, cands)
