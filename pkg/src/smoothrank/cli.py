"""Command line interface: ``smoothrank {train,predict,cv,benchmark,xor-demo}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from smoothrank import harness
from smoothrank.data import Dataset
from smoothrank.metrics import active_count, auc_of
from smoothrank.trainers import load_model, save_model

ALL_METHODS = sorted(harness.METHODS) + sorted(harness.EXTRA_METHODS)


def _load(args) -> Dataset:
    entry = {"path": args.data, "format": args.format if args.format != "auto" else None}
    if args.label_column is not None:
        entry["label_column"] = args.label_column
    if args.positive_label is not None:
        entry["positive_label"] = args.positive_label
    return harness.load_dataset_entry(entry)


def _data_args(p):
    p.add_argument("--data", required=True,
                   help="CSV or KEEL file, or builtin:iris0")
    p.add_argument("--format", choices=["auto", "csv", "keel"], default="auto")
    p.add_argument("--label-column", default=None,
                   help="CSV label column name or index (default: last)")
    p.add_argument("--positive-label", default=None)


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)


def cmd_train(args):
    ds = _load(args)
    default = {"smooth": 0.01, "ranking_cg": 1e-5, "unbounded_cg": 1e-5}.get(args.method, 1.0)
    value = default if args.param is None else args.param
    model = harness.fit_method(args.method, ds, value, seed=args.seed, max_iters=args.max_iters)
    out = args.model_out or args.out
    if out:
        save_model(model, out)
    print(json.dumps({"method": args.method, "param": value, "n": ds.n,
                      "n_prototypes": model.n_prototypes,
                      "active_count": active_count(model.weights),
                      "train_auc": auc_of(model.decision_function(ds.features), ds.labels),
                      "model": out}, sort_keys=True))


def cmd_predict(args):
    model = load_model(args.model)
    ds = _load(args)
    scores = model.decision_function(ds.features)
    out = args.scores_out or args.out
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "score", "label"])
        for i, (s, y) in enumerate(zip(scores, ds.labels)):
            w.writerow([i, repr(float(s)), int(y)])
    finally:
        if out:
            fh.close()
    if out:
        print(json.dumps({"auc": auc_of(scores, ds.labels), "scores": out}))


def cmd_cv(args):
    ds = _load(args)
    grid = None
    if args.grid:
        grid = harness.GridSpec(args.method, harness._method_info(args.method)[1],
                                [float(v) for v in args.grid.split(",")])
    grid = grid or harness.GridSpec.default(args.method)
    best, means = harness.cross_validate(ds, args.method, grid, k=args.folds, seed=args.seed,
                                         max_iters=args.max_iters)
    doc = json.dumps({"method": args.method, "param": grid.param, "best": best,
                      "grid": list(grid.values), "mean_val_auc": means},
                     indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
    sys.stdout.write(doc)


def cmd_benchmark(args):
    report, timings = harness.run_benchmark(args.config, threads=args.threads)
    out = args.out or "benchmark_out"
    harness.write_benchmark(report, timings, out)
    sys.stdout.write(report.to_text())


def cmd_xor_demo(args):
    cfg = harness.XorDemoConfig(n_per_cluster=args.n_per_cluster, noise_sd=args.noise_sd,
                                data_seed=args.data_seed, split_seed=args.seed, C=args.C,
                                alpha_tol=args.alpha, max_iters=args.max_iters, seed=args.seed)
    text, hists = harness.xor_demo(cfg, args.out or "xor_trace.csv")
    for mode, (_, h) in hists.items():
        print(f"{mode:13s} iterations={len(h):3d} final_test_auc={h.records[-1].test_auc:.3f} "
              f"max_drop={h.max_drop():.3f} stop={h.stop_reason}")


def build_parser():
    ap = argparse.ArgumentParser(prog="smoothrank", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model")
    _data_args(p)
    _common(p)
    p.add_argument("--method", choices=ALL_METHODS, default="smooth")
    p.add_argument("--param", type=float, default=None,
                   help="C (smooth, l1, linf, l2) or alpha (ranking_cg, unbounded_cg)")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--model-out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a dataset with a saved model")
    p.add_argument("--model", required=True)
    _data_args(p)
    _common(p)
    p.add_argument("--scores-out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="k-fold cross-validation over a parameter grid")
    _data_args(p)
    _common(p)
    p.add_argument("--method", choices=ALL_METHODS, default="smooth")
    p.add_argument("--grid", default=None, help="comma-separated values")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--max-iters", type=int, default=None)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("benchmark", help="run a benchmark config (JSON)")
    p.add_argument("config")
    _common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("xor-demo", help="test-AUC traces of the CG variants on noisy XOR")
    _common(p)
    p.add_argument("--n-per-cluster", type=int, default=50)
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--data-seed", type=int, default=1)
    p.add_argument("--C", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=harness.RANKING_CG_ALPHA_GRID[0])
    p.add_argument("--max-iters", type=int, default=50)
    p.set_defaults(func=cmd_xor_demo)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
