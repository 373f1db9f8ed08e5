"""Hyperedge message passing over a type dependency graph.

Messages for every edge of one kind are computed as a batch; aggregation
then runs once per step over all messages, grouped by target node.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from typegnn import tensor as T
from typegnn.graph import (
    CONSTANT_KINDS,
    CONTEXTUAL_KINDS,
    EDGE_CATEGORY,
    FIXED,
    FIXED_ARITY,
    LABELED_FIXED,
    LOGICAL_KINDS,
    NARY,
    Hyperedge,
    TypeDependencyGraph,
    tokenize_identifier,
)

LEAKY_SLOPE = 0.2
NUM_UNKNOWN = 50
MAX_POSITIONS = 16  # position slots 0..15, slot 16 is the overflow bucket

_CONST_INDEX = {k: i for i, k in enumerate(CONSTANT_KINDS)}


class UnknownConstantKind(KeyError):
    pass


class ArityMismatch(ValueError):
    pass


class EmptyPairList(ValueError):
    pass


@dataclass
class GnnOptions:
    """Switches for the ablation rows; all off is the full model."""
    no_contextual: bool = False
    no_logical: bool = False
    no_npairs_attention: bool = False
    simple_aggregation: bool = False

    def active_kinds(self) -> tuple[str, ...]:
        kinds = ()
        if not self.no_logical:
            kinds += LOGICAL_KINDS
        if not self.no_contextual:
            kinds += CONTEXTUAL_KINDS
        return kinds

    @classmethod
    def from_name(cls, name: Optional[str]) -> "GnnOptions":
        table = {
            None: {}, "none": {}, "full": {},
            "NoContextual": {"no_contextual": True},
            "NoLogical": {"no_logical": True},
            "NoNPairAttention": {"no_npairs_attention": True},
            "SimpleAggregation": {"simple_aggregation": True},
        }
        if name not in table:
            raise ValueError(f"unknown ablation {name!r}; choose from {sorted(k for k in table if k)}")
        return cls(**table[name])


# --------------------------------------------------------------------------
# Parameters

class ParameterStore:
    """Every trainable tensor, addressed by a stable path string."""

    def __init__(self, dim: int = 32, k: int = 6, vocab=(), lib_types=(), seed: int = 0,
                 hidden: int = 32, score_hidden=(32, 16, 8)):
        self.dim, self.k, self.hidden = dim, k, hidden
        self.score_hidden = tuple(score_hidden)
        self.vocab = list(vocab)
        self.token_index = {t: i for i, t in enumerate(self.vocab)}
        self.lib_types = list(lib_types)
        self.seed = seed
        self.params: dict[str, T.Tensor] = {}
        rng = np.random.default_rng(seed)
        d = dim

        self._embed("embed/var_init", (d,), rng)
        self._embed("embed/const", (len(CONSTANT_KINDS), d), rng)
        self._embed("embed/tokens", (len(self.vocab) + NUM_UNKNOWN + 1, d), rng)
        self._embed("embed/positions", (MAX_POSITIONS + 1, d), rng)
        self._embed("embed/lib_types", (max(len(self.lib_types), 1), d), rng)
        for t in range(k):
            for kind, cat in EDGE_CATEGORY.items():
                if cat == FIXED:
                    arity = FIXED_ARITY[kind]
                    width = (arity + (1 if kind in LABELED_FIXED else 0)) * d
                    for j in range(arity):
                        self._mlp(f"gnn/t{t}/{kind}/arg{j}", [width, hidden, d], rng)
                elif cat == NARY:
                    self._mlp(f"gnn/t{t}/{kind}/alpha", [2 * d, hidden, d], rng)
                    self._mlp(f"gnn/t{t}/{kind}/beta", [2 * d, hidden, d], rng)
            self._matrix(f"gnn/t{t}/agg/M1", (d, d), rng)
            self._matrix(f"gnn/t{t}/agg/M2", (d, d), rng)
        self._mlp("predict/score", [2 * d, *self.score_hidden, 1], rng)

    # -- construction helpers
    def _add(self, path, data):
        if path in self.params:
            raise KeyError(f"duplicate parameter path {path}")
        self.params[path] = T.Tensor(data, requires_grad=True, name=path)

    def _embed(self, path, shape, rng):
        self._add(path, rng.normal(0.0, 1.0 / np.sqrt(self.dim), size=shape))

    def _matrix(self, path, shape, rng):
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        self._add(path, rng.uniform(-limit, limit, size=shape))

    def _mlp(self, prefix, sizes, rng):
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            self._matrix(f"{prefix}/W{i}", (a, b), rng)
            self._add(f"{prefix}/b{i}", np.zeros(b))

    # -- access
    def __getitem__(self, path) -> T.Tensor:
        return self.params[path]

    def __contains__(self, path):
        return path in self.params

    def mlp(self, prefix: str, x: T.Tensor) -> T.Tensor:
        """Apply the MLP stored under ``prefix``: leaky-ReLU hidden layers, linear output."""
        i = 0
        while f"{prefix}/W{i + 1}" in self.params:
            x = T.leaky_relu(T.add(T.matmul(x, self.params[f"{prefix}/W{i}"]), self.params[f"{prefix}/b{i}"]),
                             LEAKY_SLOPE)
            i += 1
        return T.add(T.matmul(x, self.params[f"{prefix}/W{i}"]), self.params[f"{prefix}/b{i}"])

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        missing = set(self.params) - set(arrays)
        extra = set(arrays) - set(self.params)
        if missing or extra:
            raise KeyError(f"parameter mismatch: missing={sorted(missing)[:5]} extra={sorted(extra)[:5]}")
        for k, a in arrays.items():
            if a.shape != self.params[k].data.shape:
                raise T.ShapeMismatch(f"load {k}", a.shape, self.params[k].data.shape)
            self.params[k].data = np.asarray(a, dtype=T.default_dtype()).copy()

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def token_row(self, token: Optional[str], run_seed: int) -> int:
        """Row of ``token`` in the token table; OOV tokens hash into a bucket."""
        if token is None:
            return len(self.vocab) + NUM_UNKNOWN
        row = self.token_index.get(token)
        if row is not None:
            return row
        return len(self.vocab) + unknown_bucket(token, run_seed)

    def manifest(self) -> dict:
        return {"dim": self.dim, "k": self.k, "hidden": self.hidden, "score_hidden": list(self.score_hidden),
                "vocab": self.vocab, "lib_types": self.lib_types, "seed": self.seed}

    @classmethod
    def from_manifest(cls, m: dict) -> "ParameterStore":
        return cls(dim=m["dim"], k=m["k"], vocab=m["vocab"], lib_types=m["lib_types"], seed=m["seed"],
                   hidden=m["hidden"], score_hidden=m["score_hidden"])


def unknown_bucket(token: str, run_seed: int) -> int:
    h = hashlib.blake2b(f"{run_seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(h, "little") % NUM_UNKNOWN


def build_vocab(graphs, min_count: int = 2) -> list[str]:
    """Tokens seen more than once across all identifiers of the training graphs."""
    counts: Counter = Counter()
    for g in graphs:
        for e in g.edges:
            if e.kind in ("Name", "Access", "Object", "Usage"):
                for label in e.labels:
                    counts.update(tokenize_identifier(label))
    return sorted(t for t, c in counts.items() if c >= min_count)


# --------------------------------------------------------------------------
# Graph index: edge batches as integer arrays, built once per graph

@dataclass
class _FixedBatch:
    args: np.ndarray  # (E, arity)
    label_ids: Optional[np.ndarray]  # (E,) identifier index, for labeled kinds


@dataclass
class _NaryBatch:
    alpha: np.ndarray  # (P,)
    beta: np.ndarray  # (P,)
    positions: Optional[np.ndarray]  # (P,) position slot (Function/Call)
    label_ids: Optional[np.ndarray]  # (P,) identifier index (Object)


@dataclass
class _UsageBatch:
    head_alpha: np.ndarray  # (E,)
    head_beta: np.ndarray  # (E,)
    pair_edge: np.ndarray  # (P,)
    pair_alpha: np.ndarray  # (P,)
    pair_beta: np.ndarray  # (P,)


@dataclass
class GraphIndex:
    num_nodes: int
    init_rows: np.ndarray  # 0 for variable nodes, 1 + constant-kind index otherwise
    is_variable: np.ndarray
    identifiers: list[tuple[str, ...]]  # token tuples, referenced by label ids
    fixed: dict[str, _FixedBatch] = field(default_factory=dict)
    nary: dict[str, _NaryBatch] = field(default_factory=dict)
    usage: Optional[_UsageBatch] = None


def index_graph(g: TypeDependencyGraph, kinds=None) -> GraphIndex:
    kinds = set(kinds if kinds is not None else EDGE_CATEGORY)
    n = g.num_nodes
    init_rows = np.zeros(n, dtype=np.int64)
    for node in g.nodes:
        if node.is_constant:
            if node.const_type not in _CONST_INDEX:
                raise UnknownConstantKind(node.const_type)
            init_rows[node.id] = 1 + _CONST_INDEX[node.const_type]
    ident_ids: dict[tuple, int] = {}
    identifiers: list[tuple[str, ...]] = []

    def ident(label: str) -> int:
        toks = tuple(tokenize_identifier(label))
        if toks not in ident_ids:
            ident_ids[toks] = len(identifiers)
            identifiers.append(toks)
        return ident_ids[toks]

    idx = GraphIndex(n, init_rows, init_rows == 0, identifiers)
    grouped: dict[str, list[Hyperedge]] = {}
    for e in g.edges:
        if e.kind in kinds:
            grouped.setdefault(e.kind, []).append(e)
    for kind in EDGE_CATEGORY:  # fixed kind order keeps batching deterministic
        edges = grouped.get(kind)
        if not edges:
            continue
        cat = EDGE_CATEGORY[kind]
        if cat == FIXED:
            args = np.array([e.args for e in edges], dtype=np.int64).reshape(len(edges), FIXED_ARITY[kind])
            labels = np.array([ident(e.labels[0]) for e in edges], dtype=np.int64) if kind in LABELED_FIXED else None
            idx.fixed[kind] = _FixedBatch(args, labels)
        elif cat == NARY:
            alpha, beta, pos, lab = [], [], [], []
            for e in edges:
                for b, l in zip(e.args[1:], e.labels):
                    alpha.append(e.args[0])
                    beta.append(b)
                    if kind == "Object":
                        lab.append(ident(l))
                    else:
                        pos.append(min(int(l), MAX_POSITIONS))
            if not alpha:  # only member-less Object edges: nothing to send
                continue
            idx.nary[kind] = _NaryBatch(np.array(alpha, dtype=np.int64), np.array(beta, dtype=np.int64),
                                        np.array(pos, dtype=np.int64) if kind != "Object" else None,
                                        np.array(lab, dtype=np.int64) if kind == "Object" else None)
        else:
            ha, hb, pe, pa, pb = [], [], [], [], []
            for i, e in enumerate(edges):
                pairs = e.usage_pairs()
                if not pairs:
                    raise EmptyPairList(f"Usage edge {i} has no candidate pairs")
                ha.append(e.args[0])
                hb.append(e.args[1])
                for a, b in pairs:
                    pe.append(i)
                    pa.append(a)
                    pb.append(b)
            as_arr = lambda xs: np.array(xs, dtype=np.int64)  # noqa: E731
            idx.usage = _UsageBatch(as_arr(ha), as_arr(hb), as_arr(pe), as_arr(pa), as_arr(pb))
    return idx


# --------------------------------------------------------------------------
# Forward pieces

@dataclass
class EmbeddingState:
    vectors: T.Tensor  # (num_nodes, d)
    step: int = 0


def init_embeddings(g_or_index, p: ParameterStore) -> EmbeddingState:
    """Constant rows get their kind's vector; every variable row gets the shared initial vector."""
    gi = g_or_index if isinstance(g_or_index, GraphIndex) else index_graph(g_or_index)
    table = T.concat([T.reshape(p["embed/var_init"], (1, p.dim)), p["embed/const"]], axis=0)
    return EmbeddingState(T.gather(table, gi.init_rows), 0)


def identifier_table(identifiers, p: ParameterStore, run_seed: int) -> Optional[T.Tensor]:
    """Mean token vector per identifier; empty token lists use the no-name row."""
    if not identifiers:
        return None
    rows, seg = [], []
    for i, toks in enumerate(identifiers):
        if not toks:
            rows.append(p.token_row(None, run_seed))
            seg.append(i)
        for t in toks:
            rows.append(p.token_row(t, run_seed))
            seg.append(i)
    vecs = T.gather(p["embed/tokens"], np.array(rows, dtype=np.int64))
    return T.segment_mean(vecs, np.array(seg, dtype=np.int64), len(identifiers))


def embed_identifier(tokens, p: ParameterStore, run_seed: int) -> T.Tensor:
    return T.reshape(identifier_table([tuple(tokens)], p, run_seed), (p.dim,))


def fixed_messages(kind: str, batch: _FixedBatch, V: T.Tensor, ids: Optional[T.Tensor],
                   p: ParameterStore, t: int):
    """One message per argument slot, each from the concatenation of all arguments."""
    arity = FIXED_ARITY[kind]
    if batch.args.shape[1] != arity:
        raise ArityMismatch(f"{kind} expects {arity} arguments, got {batch.args.shape[1]}")
    parts = [T.gather(V, batch.args[:, j]) for j in range(arity)]
    if batch.label_ids is not None:
        parts.append(T.gather(ids, batch.label_ids))
    x = parts[0] if len(parts) == 1 else T.concat(parts, axis=1)
    return [(batch.args[:, j], p.mlp(f"gnn/t{t}/{kind}/arg{j}", x)) for j in range(arity)]


def nary_messages(kind: str, batch: _NaryBatch, V: T.Tensor, ids: Optional[T.Tensor],
                  p: ParameterStore, t: int):
    """k messages to the head and one message per member, each from (label, other end)."""
    if batch.positions is not None:
        labels = T.gather(p["embed/positions"], batch.positions)
    else:
        labels = T.gather(ids, batch.label_ids)
    to_alpha = p.mlp(f"gnn/t{t}/{kind}/alpha", T.concat([labels, T.gather(V, batch.beta)], axis=1))
    to_beta = p.mlp(f"gnn/t{t}/{kind}/beta", T.concat([labels, T.gather(V, batch.alpha)], axis=1))
    return [(batch.alpha, to_alpha), (batch.beta, to_beta)]


def npairs_messages(batch: _UsageBatch, V: T.Tensor, attention: bool = True):
    """Dot-product attention across candidate (class, member) pairs.

    The message to the accessed result attends with class vectors as keys and
    member vectors as values; the message to the receiver swaps the roles.
    """
    n_edges = batch.head_alpha.shape[0]
    if batch.pair_edge.size == 0:
        raise EmptyPairList("usage batch has no pairs")
    va = T.gather(V, batch.pair_alpha)
    vb = T.gather(V, batch.pair_beta)

    def attend(keys, query_nodes, values):
        if attention:
            q = T.gather(V, query_nodes[batch.pair_edge])
            w = T.segment_softmax(T.rowdot(keys, q), batch.pair_edge, n_edges)
            return T.segment_sum(T.mul(values, T.reshape(w, (-1, 1))), batch.pair_edge, n_edges)
        return T.segment_mean(values, batch.pair_edge, n_edges)

    to_beta = attend(va, batch.head_alpha, vb)
    to_alpha = attend(vb, batch.head_beta, va)
    return [(batch.head_beta, to_beta), (batch.head_alpha, to_alpha)]


def aggregate(V: T.Tensor, targets: np.ndarray, messages: T.Tensor, p: ParameterStore, t: int,
              simple: bool = False) -> T.Tensor:
    """Residual attention aggregation; nodes without messages keep their vector."""
    n = V.shape[0]
    if targets.size == 0:
        return V
    z = T.matmul(messages, p[f"gnn/t{t}/agg/M1"])
    if simple:
        delta = T.segment_mean(z, targets, n)
    else:
        keys = T.matmul(messages, p[f"gnn/t{t}/agg/M2"])
        logits = T.leaky_relu(T.rowdot(T.gather(V, targets), keys), LEAKY_SLOPE)
        w = T.segment_softmax(logits, targets, n)
        delta = T.segment_sum(T.mul(z, T.reshape(w, (-1, 1))), targets, n)
    return T.add(V, delta)


def gnn_step(gi: GraphIndex, V: T.Tensor, ids, p: ParameterStore, t: int, opts: GnnOptions) -> T.Tensor:
    blocks = []
    for kind, batch in gi.fixed.items():
        blocks += fixed_messages(kind, batch, V, ids, p, t)
    for kind, batch in gi.nary.items():
        blocks += nary_messages(kind, batch, V, ids, p, t)
    if gi.usage is not None:
        blocks += npairs_messages(gi.usage, V, attention=not opts.no_npairs_attention)
    if not blocks:
        return V
    targets = np.concatenate([b[0] for b in blocks])
    msgs = T.concat([b[1] for b in blocks], axis=0)
    keep = gi.is_variable[targets]
    if not keep.all():  # constants are pinned: drop their messages
        sel = np.nonzero(keep)[0]
        targets = targets[sel]
        msgs = T.gather(msgs, sel)
    return aggregate(V, targets, msgs, p, t, simple=opts.simple_aggregation)


def run_gnn(g, p: ParameterStore, k: Optional[int] = None, run_seed: int = 0,
            opts: Optional[GnnOptions] = None, trace: Optional[list] = None) -> EmbeddingState:
    """K rounds of message passing; ``trace`` collects the state after every round."""
    opts = opts or GnnOptions()
    k = p.k if k is None else k
    if k < 0 or k > p.k:
        raise ValueError(f"K must be in [0, {p.k}], got {k}")
    gi = g if isinstance(g, GraphIndex) else index_graph(g, opts.active_kinds())
    state = init_embeddings(gi, p)
    V = state.vectors
    if trace is not None:
        trace.append(V.data.copy())
    ids = identifier_table(gi.identifiers, p, run_seed)
    for t in range(k):
        V = gnn_step(gi, V, ids, p, t, opts)
        if trace is not None:
            trace.append(V.data.copy())
    return EmbeddingState(V, k)


def dump_trace_csv(trace, path):
    """Per-step embeddings as CSV rows: node_id, step, d floats."""
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        for step, mat in enumerate(trace):
            for nid, row in enumerate(mat):
                w.writerow([nid, step] + [repr(float(x)) for x in row])


# -- single-edge entry points (batches of one)

def _single_index(edge: Hyperedge, num_nodes: int) -> GraphIndex:
    g = TypeDependencyGraph([_placeholder(i) for i in range(num_nodes)], [edge])
    return index_graph(g)


def _placeholder(i):
    from typegnn.graph import TypeNode
    return TypeNode(i, "variable")


def msg_fixed(edge: Hyperedge, s: EmbeddingState, p: ParameterStore, t: int, run_seed: int = 0):
    if edge.category != FIXED:
        raise ArityMismatch(f"{edge.kind} is not a Fixed edge")
    if len(edge.args) != FIXED_ARITY[edge.kind]:
        raise ArityMismatch(f"{edge.kind} expects {FIXED_ARITY[edge.kind]} arguments")
    gi = _single_index(edge, s.vectors.shape[0])
    ids = identifier_table(gi.identifiers, p, run_seed)
    return [(int(tg[0]), T.reshape(m, (p.dim,))) for tg, m in fixed_messages(edge.kind, gi.fixed[edge.kind],
                                                                               s.vectors, ids, p, t)]


def msg_nary(edge: Hyperedge, s: EmbeddingState, p: ParameterStore, t: int, run_seed: int = 0):
    if edge.category != NARY:
        raise ArityMismatch(f"{edge.kind} is not an NAry edge")
    if len(edge.labels) != len(edge.args) - 1:
        raise ArityMismatch(f"{edge.kind} needs one label per member argument")
    gi = _single_index(edge, s.vectors.shape[0])
    if edge.kind not in gi.nary:
        return []
    ids = identifier_table(gi.identifiers, p, run_seed)
    out = []
    for targets, m in nary_messages(edge.kind, gi.nary[edge.kind], s.vectors, ids, p, t):
        for i, tg in enumerate(targets):
            out.append((int(tg), T.gather(m, [i])))
    return out


def msg_npairs(edge: Hyperedge, s: EmbeddingState, attention: bool = True):
    if not edge.usage_pairs():
        raise EmptyPairList("Usage edge needs at least one pair")
    gi = _single_index(edge, s.vectors.shape[0])
    return [(int(tg[0]), T.reshape(m, (-1,))) for tg, m in npairs_messages(gi.usage, s.vectors, attention)]
