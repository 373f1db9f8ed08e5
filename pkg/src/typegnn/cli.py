"""Command-line entry point: ``typegnn <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 bad input, 3 internal error.
Set ``TYPEGNN_THREADS`` to bound the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
THREADS_ENV = "TYPEGNN_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_train_flags(p):
    p.add_argument("--k", type=int, default=6, help="message-passing rounds")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--lr-start", type=float, default=1e-3)
    p.add_argument("--lr-end", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="single-threaded, wall time logged as 0")
    p.add_argument("--ablation", default=None,
                   help="NoContextual | NoLogical | NoNPairAttention | SimpleAggregation")
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--monitor", choices=("val_loss", "val_top1"), default="val_loss")
    p.add_argument("--batch-cap", type=int, default=None)
    p.add_argument("--lib-only", action="store_true", help="predict library types only")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="typegnn", description="Type prediction with graph neural networks.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-corpus", help="write a synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--train", type=int, default=60)
    p.add_argument("--val", type=int, default=10)
    p.add_argument("--test", type=int, default=10)
    p.add_argument("--name-correlation", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("extract-graph", help="extract the type dependency graph of a project")
    p.add_argument("src_dir")
    p.add_argument("out_path")

    p = sub.add_parser("train", help="train a model on a corpus directory")
    p.add_argument("corpus_dir")
    p.add_argument("out_checkpoint")
    p.add_argument("--log", default=None, help="training log CSV (default: <checkpoint>.log.csv)")
    p.add_argument("--resume", action="store_true")
    _add_train_flags(p)

    p = sub.add_parser("predict", help="predict types for one project")
    p.add_argument("checkpoint")
    p.add_argument("src_dir")
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--out", default=None)
    p.add_argument("--deterministic", action="store_true")

    p = sub.add_parser("evaluate", help="accuracy report on a corpus split")
    p.add_argument("checkpoint")
    p.add_argument("corpus_dir")
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--json", default=None, help="write the report as JSON")
    p.add_argument("--baseline", action="store_true", help="also report the name-overlap baseline")
    p.add_argument("--deterministic", action="store_true")

    p = sub.add_parser("ablate", help="train and evaluate ablation variants side by side")
    p.add_argument("corpus_dir")
    p.add_argument("--variants", default="full,NoContextual,NoLogical,NoNPairAttention,SimpleAggregation,"
                                         "K=0,K=1,K=2,K=4",
                   help="comma-separated ablation names or K=<n>")
    p.add_argument("--json", default=None)
    _add_train_flags(p)
    return ap


def _configure_threads(deterministic: bool):
    n = "1" if deterministic else os.environ.get(THREADS_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = n


def _train_config(args):
    from typegnn.trainer import TrainConfig
    ablation = None if args.ablation in (None, "none", "full") else args.ablation
    return TrainConfig(dim=args.dim, k=args.k, lr_start=args.lr_start, lr_end=args.lr_end,
                       weight_decay=args.weight_decay, seed=args.seed, deterministic=args.deterministic,
                       ablation=ablation, max_epochs=args.max_epochs, patience=args.patience,
                       monitor=args.monitor, batch_cap=args.batch_cap, lib_only=args.lib_only)


def _log_config(args, extra=None):
    resolved = {k: v for k, v in sorted(vars(args).items())}
    if extra:
        resolved.update(extra)
    print("config: " + json.dumps(resolved, sort_keys=True, default=str), file=sys.stderr)


def cmd_gen_corpus(args):
    from typegnn.evaluation.synthetic import SyntheticSpec, generate_corpus
    spec = SyntheticSpec(train=args.train, val=args.val, test=args.test, name_correlation=args.name_correlation)
    corpus = generate_corpus(spec, args.seed, args.out_dir)
    print(f"wrote {sum(len(v) for v in corpus.values())} projects to {args.out_dir}")


def cmd_extract_graph(args):
    from typegnn.frontend import load_project
    from typegnn.graph import build_graph
    g = build_graph(load_project(args.src_dir))
    with open(args.out_path, "w") as f:
        f.write(g.dumps())
    counts = g.edge_counts()
    print(f"nodes: {g.num_nodes}")
    for kind, n in counts.items():
        print(f"{kind}: {n}")


def cmd_train(args):
    from typegnn.trainer import load_corpus, train
    cfg = _train_config(args)
    cfg.validate()
    log_path = args.log or args.out_checkpoint + ".log.csv"
    corpus = load_corpus(args.corpus_dir)
    res = train(corpus, cfg, out_path=args.out_checkpoint, log_path=log_path, resume=args.resume, verbose=True)
    print(f"best epoch {res.best_epoch}; checkpoint {args.out_checkpoint}; log {log_path}")


def cmd_predict(args):
    from typegnn.predictor import predict
    from typegnn.trainer import load_model, load_project_graph
    from typegnn.evaluation import eval_seed
    if args.top_n <= 0:
        raise UsageError("--top-n must be positive")
    store, cfg, _ = load_model(args.checkpoint)
    g = load_project_graph(args.src_dir, cache=False)
    res = predict(g, store, k=cfg.k, run_seed=eval_seed(cfg), opts=cfg.options, lib_only=cfg.lib_only)
    text = json.dumps(res.to_json(g, args.top_n), indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_evaluate(args):
    from typegnn.evaluation import evaluate_baseline, evaluate_model
    from typegnn.trainer import load_corpus, load_model
    store, cfg, _ = load_model(args.checkpoint)
    corpus = load_corpus(args.corpus_dir)
    projects = getattr(corpus, args.split)
    rep = evaluate_model(projects, store, cfg)
    print(rep.table(f"model ({args.split})"))
    out = {"model": rep.to_json()}
    if args.baseline:
        base = evaluate_baseline(corpus, projects, store.lib_types, cfg.lib_only)
        print(base.table("SimilarName"))
        out["similar_name"] = base.to_json()
    if args.json:
        with open(args.json, "w") as f:
            json.dump(out, f, indent=1, sort_keys=True)


def cmd_ablate(args):
    from typegnn.evaluation import ablation_table, run_ablation
    from typegnn.trainer import load_corpus
    base = _train_config(args)
    base.validate()
    corpus = load_corpus(args.corpus_dir)
    rows = {}
    for v in [x.strip() for x in args.variants.split(",") if x.strip()]:
        rows[v], _ = run_ablation(corpus, base, v)
        print(f"{v}: top-1 {100 * rows[v].acc():.1f}", file=sys.stderr)
    print(ablation_table(rows))
    if args.json:
        with open(args.json, "w") as f:
            json.dump({k: v.to_json() for k, v in rows.items()}, f, indent=1, sort_keys=True)


COMMANDS = {"gen-corpus": cmd_gen_corpus, "extract-graph": cmd_extract_graph, "train": cmd_train,
            "predict": cmd_predict, "evaluate": cmd_evaluate, "ablate": cmd_ablate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    _configure_threads(getattr(args, "deterministic", False))
    _log_config(args)

    from typegnn.checkpoint import CheckpointError
    from typegnn.frontend import FrontendError
    from typegnn.graph import GraphError
    from typegnn.trainer import CorpusError, NoAnnotations
    try:
        COMMANDS[args.cmd](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FrontendError, GraphError, CheckpointError, CorpusError, NoAnnotations, FileNotFoundError,
            NotADirectoryError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
