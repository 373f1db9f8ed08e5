"""Training loop: one project per Adam step, linear LR decay, early stopping."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from typegnn import tensor as T
from typegnn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from typegnn.frontend import load_project
from typegnn.gnn import GnnOptions, GraphIndex, ParameterStore, build_vocab, index_graph, run_gnn
from typegnn.graph import TypeDependencyGraph, build_graph
from typegnn.predictor import CandidateSet, build_lib_types, prediction_targets, score_matrix

LOG_COLUMNS = ("epoch", "train_loss", "val_loss", "val_top1", "lr", "wall_time")
MANIFEST_VERSION = 1


class NoAnnotations(ValueError):
    pass


class CorpusError(ValueError):
    pass


@dataclass
class TrainConfig:
    dim: int = 32
    k: int = 6
    lr_start: float = 1e-3
    lr_end: float = 1e-4
    lr_decay_until_epoch: int = 30
    weight_decay: float = 1e-4
    batch_cap: Optional[int] = None  # None: median annotation count of the training projects
    patience: int = 5
    monitor: str = "val_loss"  # or "val_top1": quantity used for early stopping and model selection
    max_epochs: int = 100
    seed: int = 0
    ablation: Optional[str] = None
    lib_only: bool = False
    top_lib: int = 100
    deterministic: bool = False

    def validate(self):
        for name in ("dim", "lr_start", "lr_end", "lr_decay_until_epoch", "patience", "max_epochs", "top_lib"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.lr_end > self.lr_start:
            raise ValueError("lr_end must not exceed lr_start")
        if self.batch_cap is not None and self.batch_cap <= 0:
            raise ValueError("batch_cap must be positive")
        if self.monitor not in ("val_loss", "val_top1"):
            raise ValueError("monitor must be val_loss or val_top1")
        GnnOptions.from_name(self.ablation)

    @property
    def options(self) -> GnnOptions:
        return GnnOptions.from_name(self.ablation)


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Linear interpolation from lr_start to lr_end, flat after the decay horizon."""
    frac = min(epoch, cfg.lr_decay_until_epoch) / cfg.lr_decay_until_epoch
    return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(x) for x in parts]).generate_state(1)[0])


# --------------------------------------------------------------------------
# Corpus

@dataclass
class Project:
    graph: TypeDependencyGraph
    indexes: dict = field(default_factory=dict)  # active edge kinds -> GraphIndex

    @property
    def project_id(self) -> str:
        return self.graph.project_id


@dataclass
class Corpus:
    train: list[Project] = field(default_factory=list)
    val: list[Project] = field(default_factory=list)
    test: list[Project] = field(default_factory=list)

    def validate(self):
        ids = [p.project_id for split in (self.train, self.val, self.test) for p in split]
        if len(ids) != len(set(ids)):
            raise CorpusError("project ids must be unique across splits")
        for p in self.train + self.val + self.test:
            if not p.graph.annotations:
                raise CorpusError(f"project {p.project_id} has no annotations")

    @classmethod
    def from_sources(cls, splits: dict) -> "Corpus":
        return cls(**{k: [Project(build_graph(src)) for src in v] for k, v in splits.items()})


def _source_hash(src) -> str:
    h = hashlib.sha256()
    for path, text in src.files:
        h.update(path.encode() + b"\0" + text.encode() + b"\0")
    return h.hexdigest()


def load_project_graph(project_dir, project_id: Optional[str] = None, cache: bool = True) -> TypeDependencyGraph:
    """Extract a project's graph, reusing ``graph.json`` when its source hash matches."""
    project_dir = Path(project_dir)
    src = load_project(project_dir, project_id)
    digest = _source_hash(src)
    cache_path = project_dir / "graph.json"
    if cache and cache_path.exists():
        try:
            blob = json.loads(cache_path.read_text())
            if blob.get("source_hash") == digest:
                return TypeDependencyGraph.from_json(blob["graph"])
        except (ValueError, KeyError):
            pass
    g = build_graph(src)
    if cache:
        cache_path.write_text(json.dumps({"source_hash": digest, "graph": g.to_json()}, sort_keys=True))
    return g


def load_corpus(root, cache: bool = True, splits=("train", "val", "test")) -> Corpus:
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus directory {root} does not exist")
    out = Corpus()
    for split in splits:
        d = root / split
        if not d.is_dir():
            continue
        projects = [Project(load_project_graph(p, p.name, cache)) for p in sorted(d.iterdir()) if p.is_dir()]
        setattr(out, split, projects)
    out.validate()
    return out


# --------------------------------------------------------------------------
# Loss

def _index(proj, opts: GnnOptions) -> GraphIndex:
    kinds = opts.active_kinds()
    if isinstance(proj, Project):
        if kinds not in proj.indexes:
            proj.indexes[kinds] = index_graph(proj.graph, kinds)
        return proj.indexes[kinds]
    return index_graph(proj, kinds)


def labeled_targets(g: TypeDependencyGraph, cands: CandidateSet) -> tuple[np.ndarray, np.ndarray]:
    """Annotated nodes whose true type is a candidate, with the truth's candidate index."""
    pos = {n: i for i, n in enumerate(cands.names)}
    nodes, labels = [], []
    for nid in prediction_targets(g):
        truth = g.annotations[int(nid)]
        if truth in pos:
            nodes.append(int(nid))
            labels.append(pos[truth])
    return np.array(nodes, dtype=np.int64), np.array(labels, dtype=np.int64)


def project_loss(proj, p: ParameterStore, cfg: TrainConfig, run_seed: int, batch_cap: Optional[int] = None,
                 sample_seed: Optional[int] = None) -> tuple[T.Tensor, int]:
    """Mean cross-entropy over (downsampled) annotated nodes; returns (loss, number of terms)."""
    g = proj.graph if isinstance(proj, Project) else proj
    cands = CandidateSet.for_graph(g, p.lib_types, cfg.lib_only)
    nodes, labels = labeled_targets(g, cands)
    if nodes.size == 0:
        raise NoAnnotations(f"project {g.project_id} has no predictable annotations")
    if batch_cap is not None and nodes.size > batch_cap:
        rng = np.random.default_rng(run_seed if sample_seed is None else sample_seed)
        keep = np.sort(rng.choice(nodes.size, size=batch_cap, replace=False))
        nodes, labels = nodes[keep], labels[keep]
    V = run_gnn(_index(proj, cfg.options), p, k=cfg.k, run_seed=run_seed, opts=cfg.options).vectors
    return T.cross_entropy(score_matrix(V, nodes, cands, p), labels), int(nodes.size)


def evaluate_loss(projects, p: ParameterStore, cfg: TrainConfig, run_seed: int) -> tuple[float, float]:
    """Mean loss over projects and top-1 accuracy over all their annotations."""
    losses, hits, total = [], 0, 0
    for proj in projects:
        g = proj.graph
        cands = CandidateSet.for_graph(g, p.lib_types, cfg.lib_only)
        nodes, labels = labeled_targets(g, cands)
        total += len(prediction_targets(g))
        if nodes.size == 0:
            continue
        V = run_gnn(_index(proj, cfg.options), p, k=cfg.k, run_seed=run_seed, opts=cfg.options).vectors
        logits = score_matrix(V, nodes, cands, p)
        losses.append(float(T.cross_entropy(logits, labels).data))
        hits += int((np.argmax(logits.data, axis=1) == labels).sum())
    return (float(np.mean(losses)) if losses else float("nan")), (hits / total if total else 0.0)


# --------------------------------------------------------------------------
# Training

@dataclass
class TrainResult:
    store: ParameterStore
    log: list[dict]
    best_epoch: int
    best_val_loss: float


def new_store(corpus: Corpus, cfg: TrainConfig) -> ParameterStore:
    graphs = [p.graph for p in corpus.train]
    return ParameterStore(dim=cfg.dim, k=cfg.k, vocab=build_vocab(graphs),
                          lib_types=build_lib_types(graphs, cfg.top_lib), seed=cfg.seed)


def median_batch_cap(corpus: Corpus) -> int:
    return max(1, int(np.median([len(prediction_targets(p.graph)) for p in corpus.train])))


def manifest(store: ParameterStore, cfg: TrainConfig, batch_cap: int) -> dict:
    return {"manifest_version": MANIFEST_VERSION, "config": asdict(cfg), "batch_cap": batch_cap,
            "model": store.manifest()}


def _adam_arrays(state: T.AdamState) -> dict:
    out = {}
    for k in state.m:
        out[f"adam/m/{k}"] = state.m[k]
        out[f"adam/v/{k}"] = state.v[k]
        out[f"adam/t/{k}"] = np.array(state.t[k], dtype=np.int64)
    return out


def _restore_adam(arrays: dict) -> T.AdamState:
    st = T.AdamState()
    for k, a in arrays.items():
        kind, _, path = k[len("adam/"):].partition("/")
        if kind == "m":
            st.m[path] = a.copy()
        elif kind == "v":
            st.v[path] = a.copy()
        elif kind == "t":
            st.t[path] = int(a)
    return st


def format_log(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for r in rows:
        w.writerow([r["epoch"], f"{r['train_loss']:.8f}", f"{r['val_loss']:.8f}", f"{r['val_top1']:.6f}",
                    f"{r['lr']:.8g}", f"{r['wall_time']:.3f}"])
    return buf.getvalue()


def save_model(path, store: ParameterStore, cfg: TrainConfig, batch_cap: int, extra: Optional[dict] = None):
    meta = manifest(store, cfg, batch_cap)
    meta.update(extra or {})
    save_checkpoint(path, store.arrays(), cfg.seed, meta)


def load_model(path) -> tuple[ParameterStore, TrainConfig, dict]:
    try:
        arrays, _, meta = load_checkpoint(path)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint {path} not found")
    if meta.get("manifest_version") != MANIFEST_VERSION:
        raise CheckpointError(f"{path}: unsupported manifest version {meta.get('manifest_version')}")
    cfg = TrainConfig(**meta["config"])
    store = ParameterStore.from_manifest(meta["model"])
    store.load_arrays({k: v for k, v in arrays.items() if not k.startswith("adam/")})
    return store, cfg, meta


def train(corpus: Corpus, cfg: TrainConfig, out_path=None, log_path=None, resume: bool = False,
          verbose: bool = False) -> TrainResult:
    """Fit a model; keeps the parameters with the best validation loss.

    With ``out_path`` the best model is written there and the latest state
    (parameters, optimizer moments, counters) to ``out_path + '.resume'`` so
    an interrupted run continues where it stopped.
    """
    cfg.validate()
    corpus.validate()
    if not corpus.train:
        raise CorpusError("training split is empty")
    opts = cfg.options
    batch_cap = cfg.batch_cap or median_batch_cap(corpus)
    store = new_store(corpus, cfg)
    adam = T.AdamState()
    log: list[dict] = []
    best_val, best_epoch, bad_epochs, start_epoch = float("inf"), -1, 0, 0
    best_arrays = {k: v.copy() for k, v in store.arrays().items()}
    resume_path = Path(str(out_path) + ".resume") if out_path is not None else None

    if resume and resume_path is not None and resume_path.exists():
        arrays, _, meta = load_checkpoint(resume_path)
        store = ParameterStore.from_manifest(meta["model"])
        store.load_arrays({k: v for k, v in arrays.items() if k.startswith(("embed/", "gnn/", "predict/"))})
        adam = _restore_adam({k: v for k, v in arrays.items() if k.startswith("adam/")})
        adam.step = meta["adam_step"]
        log = meta["log"]
        best_val, best_epoch, bad_epochs = meta["best_val"], meta["best_epoch"], meta["bad_epochs"]
        start_epoch = meta["epoch"] + 1
        best_arrays = {k[len("best/"):]: v for k, v in arrays.items() if k.startswith("best/")}

    eval_seed = derive_seed(cfg.seed, 1 << 30)
    for epoch in range(start_epoch, cfg.max_epochs):
        if bad_epochs >= cfg.patience:
            break
        t0 = time.perf_counter()
        lr = lr_at(epoch, cfg)
        order = np.random.default_rng(derive_seed(cfg.seed, epoch)).permutation(len(corpus.train))
        losses = []
        for i in order:
            proj = corpus.train[int(i)]
            run_seed = derive_seed(cfg.seed, epoch, int(i))
            store.zero_grad()
            with T.Tape() as tape:
                loss, _ = project_loss(proj, store, cfg, run_seed, batch_cap)
                tape.backward(loss)
            grads = {k: v.grad for k, v in store.params.items() if v.grad is not None}
            T.adam_step(store.params, grads, adam, lr, cfg.weight_decay)
            losses.append(float(loss.data))
        store.zero_grad()
        val_projects = corpus.val or corpus.train
        val_loss, val_top1 = evaluate_loss(val_projects, store, cfg, eval_seed)
        watched = val_loss if cfg.monitor == "val_loss" else -val_top1
        if watched < best_val - 1e-12:
            best_val, best_epoch, bad_epochs = watched, epoch, 0
            best_arrays = {k: v.copy() for k, v in store.arrays().items()}
        else:
            bad_epochs += 1
        wall = 0.0 if cfg.deterministic else time.perf_counter() - t0
        log.append({"epoch": epoch, "train_loss": float(np.mean(losses)), "val_loss": val_loss,
                    "val_top1": val_top1, "lr": lr, "wall_time": wall})
        if verbose:
            print(format_log(log[-1:]).splitlines()[-1], flush=True)
        if out_path is not None:
            best_store = ParameterStore.from_manifest(store.manifest())
            best_store.load_arrays(best_arrays)
            save_model(out_path, best_store, cfg, batch_cap, {"best_epoch": best_epoch, "best_val_loss": best_val})
            state = {f"best/{k}": v for k, v in best_arrays.items()}
            state.update(store.arrays())
            state.update(_adam_arrays(adam))
            meta = {"model": store.manifest(), "epoch": epoch, "adam_step": adam.step, "log": log,
                    "best_val": best_val, "best_epoch": best_epoch, "bad_epochs": bad_epochs}
            save_checkpoint(resume_path, state, cfg.seed, meta)
        if log_path is not None:
            Path(log_path).write_text(format_log(log))

    store.load_arrays(best_arrays)
    return TrainResult(store, log, best_epoch, best_val)
