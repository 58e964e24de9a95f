"""Cross-validation, benchmark orchestration, reports and the XOR stability demo."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from smoothrank.data import (DataError, Dataset, MinMaxScaler, SplitSpec, kfold, load_builtin,
                             load_csv, load_keel, make_xor, stratified_split)
from smoothrank.metrics import active_count, auc_of
from smoothrank.trainers import CgConfig, train_linear_baseline, train_prototype_cg

SMOOTH_C_GRID = (1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0)
RANKING_CG_ALPHA_GRID = (1e-5, 5e-5, 1e-4, 2.5e-4, 5e-4, 7.5e-4, 1e-3, 2.5e-3, 5e-3, 7.5e-3,
                         1e-2, 2.5e-2, 5e-2)
BASELINE_C_GRID = (1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0, 5.0, 10.0, 50.0, 100.0, 500.0,
                   1000.0, 5000.0)

METHODS = {
    # name: (display label, parameter name, default grid)
    "smooth": ("Smooth Ranking-CG Prototype", "C", SMOOTH_C_GRID),
    "ranking_cg": ("Ranking-CG Prototype", "alpha", RANKING_CG_ALPHA_GRID),
    "l1": ("L1 Ranking", "C", BASELINE_C_GRID),
    "linf": ("Linf Ranking", "C", BASELINE_C_GRID),
    "l2": ("Ranking SVM", "C", BASELINE_C_GRID),
}
EXTRA_METHODS = {"unbounded_cg": ("Unbounded Ranking-CG Prototype", "alpha",
                                  RANKING_CG_ALPHA_GRID)}
REPORT_FORMAT = "smoothrank-benchmark 1"
WIN_DECIMALS = 3


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    method: str
    param: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("grid must not be empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls, method: str) -> "GridSpec":
        _, param, values = _method_info(method)
        return cls(method, param, values)


def _method_info(method):
    if method in METHODS:
        return METHODS[method]
    if method in EXTRA_METHODS:
        return EXTRA_METHODS[method]
    raise ValueError(f"unknown method {method!r}; choose from "
                     f"{sorted(METHODS) + sorted(EXTRA_METHODS)}")


def fit_method(method: str, train: Dataset, value: float, seed: int = 0,
               max_iters: int | None = None, return_history: bool = False):
    """Train ``method`` with its complexity parameter set to ``value``.

    With ``return_history`` the result is ``(model, history)``; the history
    is ``None`` for the linear baselines.
    """
    _method_info(method)
    if method == "smooth":
        cfg = CgConfig("smooth", C=value, seed=seed, max_iters=max_iters)
    elif method in ("ranking_cg", "unbounded_cg"):
        mode = "bounded_cg" if method == "ranking_cg" else "unbounded_cg"
        cfg = CgConfig(mode, alpha_tol=value, seed=seed, max_iters=max_iters)
    else:
        reg = {"l1": "L1", "linf": "Linf", "l2": "L2"}[method]
        model = train_linear_baseline(train, reg, value)
        return (model, None) if return_history else model
    model, hist = train_prototype_cg(train, cfg)
    return (model, hist) if return_history else model


def cross_validate(train: Dataset, method: str, grid: GridSpec | None = None, k: int = 5,
                   seed: int = 0, deadline: float | None = None, max_iters: int | None = None):
    """Mean validation AUC per grid value; best is the argmax, ties to the smallest value.

    Returns ``(best_value, [mean AUC per value])``.
    """
    grid = grid or GridSpec.default(method)
    folds = kfold(train, SplitSpec(k_folds=k, seed=seed))
    means = []
    for value in grid.values:
        aucs = []
        for tr_idx, va_idx in folds:
            if deadline is not None and time.monotonic() > deadline:
                raise BudgetExceeded("time budget exceeded during cross-validation")
            tr, va = train.subset(tr_idx), train.subset(va_idx)
            model = fit_method(method, tr, value, seed=seed, max_iters=max_iters)
            aucs.append(auc_of(model.decision_function(va.features), va.labels))
        means.append(float(np.mean(aucs)))
    best = 0
    for i, m in enumerate(means):
        if m > means[best] + 1e-12:
            best = i
    return grid.values[best], means


# -- benchmark ---------------------------------------------------------------

@dataclass
class CellResult:
    dataset: str
    method: str
    status: str
    test_auc: float | None = None
    active_count: int | None = None
    n_available: int | None = None
    param_name: str = ""
    param: float | None = None
    cv_auc: list = field(default_factory=list)
    approximate: bool = False
    error: str | None = None
    n_prototypes: int | None = None
    iterations: int | None = None
    runtime: float = 0.0

    def to_json(self):
        return {"dataset": self.dataset, "method": self.method, "status": self.status,
                "test_auc": self.test_auc, "active_count": self.active_count,
                "n_features_available": self.n_available, "param_name": self.param_name,
                "param": self.param, "cv_auc": self.cv_auc, "approximate": self.approximate,
                "n_prototypes": self.n_prototypes, "iterations": self.iterations,
                "error": self.error}


@dataclass
class BenchmarkReport:
    config: dict
    results: list
    wins: dict
    mean_pct_features: dict

    def to_json(self) -> str:
        doc = {"format": REPORT_FORMAT, "config": self.config,
               "results": [r.to_json() for r in self.results],
               "summary": {"wins": self.wins, "mean_pct_features": self.mean_pct_features}}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        methods = self.config["methods"]
        datasets = []
        for r in self.results:
            if r.dataset not in datasets:
                datasets.append(r.dataset)
        cell = {(r.dataset, r.method): r for r in self.results}
        head = ["dataset"] + [METHODS.get(m, EXTRA_METHODS.get(m, (m,)))[0] for m in methods]

        def table(title, fmt):
            rows = [head]
            for ds in datasets:
                rows.append([ds] + [fmt(cell.get((ds, m))) for m in methods])
            return title + "\n" + _align(rows)

        def fmt_auc(r):
            if r is None:
                return "-"
            return f"{r.test_auc:.3f}" if r.status == "ok" else r.status
        def fmt_feat(r):
            if r is None:
                return "-"
            return str(r.active_count) if r.status == "ok" else r.status

        summary = [["", *head[1:]],
                   ["# of datasets with highest AUC"] + [str(self.wins[m]) for m in methods],
                   ["% of features used"] + [
                       "-" if self.mean_pct_features[m] is None
                       else f"{self.mean_pct_features[m]:.0f}%" for m in methods]]
        parts = [table("Out-of-sample AUC", fmt_auc),
                 table("Number of features with |w| >= 0.001", fmt_feat),
                 "Summary\n" + _align(summary)]
        if any(r.approximate for r in self.results):
            parts.append("Ranking SVM uses an averaged-subgradient solver "
                         "(approximate baseline).")
        return "\n\n".join(parts) + "\n"


def _align(rows):
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for r in rows:
        out.append("  ".join([r[0].ljust(widths[0])]
                             + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]).rstrip())
    return "\n".join(out)


def count_wins(results, methods):
    """Per dataset, every method whose rounded AUC equals the best scores a win."""
    wins = {m: 0 for m in methods}
    by_ds = {}
    for r in results:
        if r.status == "ok":
            by_ds.setdefault(r.dataset, []).append(r)
    for rs in by_ds.values():
        best = max(round(r.test_auc, WIN_DECIMALS) for r in rs)
        for r in rs:
            if round(r.test_auc, WIN_DECIMALS) == best:
                wins[r.method] += 1
    return wins


def mean_pct_features(results, methods):
    out = {}
    for m in methods:
        pcts = [100.0 * r.active_count / r.n_available for r in results
                if r.method == m and r.status == "ok"]
        out[m] = float(np.mean(pcts)) if pcts else None
    return out


def load_dataset_entry(entry: dict, base: Path | None = None) -> Dataset:
    """Load a dataset described by a benchmark config entry."""
    path = entry["path"]
    name = entry.get("name")
    if path.startswith("builtin:"):
        ds = load_builtin(path.split(":", 1)[1])
    else:
        p = Path(path)
        if base is not None and not p.is_absolute():
            p = base / p
        fmt = entry.get("format") or ("keel" if p.suffix == ".dat" else "csv")
        if fmt == "keel":
            ds = load_keel(p, entry.get("positive_label"))
        elif fmt == "csv":
            ds = load_csv(p, entry.get("label_column", -1),
                          entry.get("positive_label", "positive"))
        else:
            raise DataError(f"unknown dataset format {fmt!r}")
    return Dataset(ds.features, ds.labels, name or ds.name)


def normalize_config(cfg: dict) -> dict:
    methods = list(cfg.get("methods", list(METHODS)))
    for m in methods:
        _method_info(m)
    datasets = []
    for i, entry in enumerate(cfg.get("datasets", [])):
        if isinstance(entry, str):
            entry = {"path": entry}
        if "path" not in entry:
            raise ValueError(f"dataset entry {i} has no path")
        entry = dict(entry)
        entry.setdefault("name", Path(entry["path"].split(":", 1)[-1]).stem)
        datasets.append(entry)
    if not datasets:
        raise ValueError("config lists no datasets")
    grids = {}
    for m in methods:
        vals = cfg.get("grids", {}).get(m)
        grids[m] = list(GridSpec(m, _method_info(m)[1], vals or _method_info(m)[2]).values)
    return {
        "datasets": datasets,
        "methods": methods,
        "seed": int(cfg.get("seed", 0)),
        "test_fraction": float(cfg.get("test_fraction", 0.25)),
        "k_folds": int(cfg.get("k_folds", 5)),
        "scale": bool(cfg.get("scale", False)),
        "time_budget": float(cfg.get("time_budget", 600.0)),
        "max_iters": cfg.get("max_iters"),
        "grids": grids,
    }


def _run_cell(ds_name, train, test, method, cfg, deadline):
    param_name = _method_info(method)[1]
    t0 = time.perf_counter()
    res = CellResult(ds_name, method, "ok", param_name=param_name,
                     n_available=train.n, approximate=(method == "l2"))
    try:
        grid = GridSpec(method, param_name, cfg["grids"][method])
        best, means = cross_validate(train, method, grid, k=cfg["k_folds"], seed=cfg["seed"],
                                     deadline=deadline, max_iters=cfg["max_iters"])
        model, hist = fit_method(method, train, best, seed=cfg["seed"],
                                 max_iters=cfg["max_iters"], return_history=True)
        res.n_prototypes = model.n_prototypes
        res.iterations = len(hist) if hist is not None else None
        res.param = best
        res.cv_auc = means
        res.test_auc = auc_of(model.decision_function(test.features), test.labels)
        res.active_count = active_count(model.weights)
    except BudgetExceeded:
        res.status = "timeout"
    except Exception as exc:  # recorded in the report, never fatal
        res.status = "error"
        res.error = f"{type(exc).__name__}: {exc}"
    res.runtime = time.perf_counter() - t0
    return res


def run_benchmark(config, threads: int = 1, base_dir=None):
    """Run every dataset x method cell; returns ``(report, timings)``.

    ``timings`` maps ``"dataset/method"`` to seconds.  It is kept out of the
    report so that reports are byte-reproducible.
    """
    if isinstance(config, (str, Path)):
        base_dir = base_dir or Path(config).parent
        with open(config, encoding="utf-8") as fh:
            config = json.load(fh)
    cfg = normalize_config(config)
    jobs = []
    failed = []
    for entry in cfg["datasets"]:
        name = entry["name"]
        try:
            ds = load_dataset_entry(entry, Path(base_dir) if base_dir else None)
            train, test = stratified_split(ds, SplitSpec(cfg["test_fraction"], cfg["k_folds"],
                                                         cfg["seed"]))
            if cfg["scale"]:
                sc = MinMaxScaler.fit(train)
                train, test = sc.transform(train), sc.transform(test)
        except Exception as exc:
            for m in cfg["methods"]:
                failed.append(CellResult(name, m, "error",
                                         param_name=_method_info(m)[1],
                                         error=f"{type(exc).__name__}: {exc}"))
            continue
        jobs.append((name, train, test))
    results = list(failed)
    budgets = {}

    def task(job, method):
        name, train, test = job
        deadline = budgets.setdefault(name, time.monotonic() + cfg["time_budget"])
        return _run_cell(name, train, test, method, cfg, deadline)

    cells = [(job, m) for job in jobs for m in cfg["methods"]]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results += list(pool.map(lambda jm: task(*jm), cells))
    else:
        results += [task(job, m) for job, m in cells]
    ds_order = {e["name"]: i for i, e in enumerate(cfg["datasets"])}
    m_order = {m: i for i, m in enumerate(cfg["methods"])}
    results.sort(key=lambda r: (ds_order[r.dataset], m_order[r.method]))
    report = BenchmarkReport(cfg, results, count_wins(results, cfg["methods"]),
                             mean_pct_features(results, cfg["methods"]))
    timings = {f"{r.dataset}/{r.method}": r.runtime for r in results}
    return report, timings


def write_benchmark(report: BenchmarkReport, timings: dict, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return out


# -- XOR demo ----------------------------------------------------------------

@dataclass(frozen=True)
class XorDemoConfig:
    n_per_cluster: int = 50
    noise_sd: float = 0.1
    data_seed: int = 1
    split_seed: int = 0
    test_fraction: float = 0.25
    C: float = 0.01
    alpha_tol: float = RANKING_CG_ALPHA_GRID[0]
    max_iters: int = 50
    seed: int = 0


XOR_METHODS = ("smooth", "bounded_cg", "unbounded_cg")


def xor_histories(cfg: XorDemoConfig = XorDemoConfig()):
    ds = make_xor(cfg.n_per_cluster, cfg.noise_sd, cfg.data_seed)
    train, test = stratified_split(ds, SplitSpec(cfg.test_fraction, seed=cfg.split_seed))
    out = {}
    for mode in XOR_METHODS:
        if mode == "smooth":
            cg = CgConfig(mode, C=cfg.C, max_iters=cfg.max_iters, seed=cfg.seed)
        else:
            cg = CgConfig(mode, alpha_tol=cfg.alpha_tol, max_iters=cfg.max_iters, seed=cfg.seed)
        out[mode] = train_prototype_cg(train, cg, test)
    return out


def trace_csv(histories) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "method", "train_auc", "test_auc"])
    for mode, (_, hist) in histories.items():
        for r in hist.records:
            w.writerow([r.t, mode, repr(float(r.train_auc)), repr(float(r.test_auc))])
    return buf.getvalue()


def xor_demo(cfg: XorDemoConfig = XorDemoConfig(), out_path=None):
    """Run the three column-generation variants on one XOR split.

    Writes the per-iteration trace CSV to ``out_path`` when given and
    returns ``(csv_text, histories)``.
    """
    hists = xor_histories(cfg)
    text = trace_csv(hists)
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text, hists
