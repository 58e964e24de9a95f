"""Training drivers: prototype column generation and the Ranking SVM baselines.

All models score a point ``x`` as ``sum_t w_t ||x - q_t||``.  Prototype
models learn the points ``q_t``; the linear baselines use every training
point as a reference (the dissimilarity representation).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from smoothrank.data import Dataset, dissimilarity_matrix
from smoothrank.master import (DistanceColumns, build_bounded_master, build_l1_master,
                               build_smooth_master, build_unbounded_master, solve_master)
from smoothrank.metrics import auc_of
from smoothrank.pricing import AdamConfig, PricingProblem, solve_pricing

MODES = ("smooth", "bounded_cg", "unbounded_cg")
REGULARIZERS = ("L1", "Linf", "L2")
FORMAT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass
class DistanceModel:
    prototypes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.prototypes = np.atleast_2d(np.asarray(self.prototypes, dtype=np.float64))
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.weights.size != self.prototypes.shape[0] or self.weights.size < 1:
            raise ValueError("need one weight per prototype and at least one prototype")
        if not (np.all(np.isfinite(self.prototypes)) and np.all(np.isfinite(self.weights))):
            raise ValueError("model parameters must be finite")

    @property
    def feature_dim(self) -> int:
        return self.prototypes.shape[1]

    @property
    def n_prototypes(self) -> int:
        return self.weights.size

    def decision_function(self, X) -> np.ndarray:
        X = X.features if isinstance(X, Dataset) else np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.feature_dim:
            raise ValueError(f"points have dimension {X.shape[1]}, model expects "
                             f"{self.feature_dim}")
        return dissimilarity_matrix(self.prototypes, X) @ self.weights


def score(model: DistanceModel, x) -> float:
    """Score of a single point."""
    return float(model.decision_function(np.asarray(x, float)[None, :])[0])


@dataclass
class PrototypeModel(DistanceModel):
    mode: str = "smooth"
    C: float | None = None
    alpha_tol: float | None = None
    seed: int = 0


@dataclass
class LinearDistanceModel(DistanceModel):
    """Weights over all training points used as references."""

    reg: str = "L2"
    C: float = 1.0
    approximate: bool = False
    checkpoints: list = field(default_factory=list)


@dataclass(frozen=True)
class CgConfig:
    """Column-generation settings.

    ``C`` is required for ``smooth``; ``alpha_tol`` for the two Ranking-CG
    modes, where iterations stop once the pricing value divided by the
    number of pairs falls below it.
    """

    mode: str = "smooth"
    C: float | None = None
    alpha_tol: float | None = None
    convergence_tol: float = 0.01
    max_iters: int | None = None
    seed: int = 0
    adam: AdamConfig = AdamConfig()
    warm_start_sample: int | None = None
    pair_cap: int | None = None
    duplicate_tol: float = 1e-9
    zero_tol: float = 1e-12

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "smooth":
            if self.C is None or self.C < 0:
                raise ValueError("smooth mode needs C >= 0")
            if self.alpha_tol is not None:
                raise ValueError("alpha_tol is not used by smooth mode")
        else:
            if self.alpha_tol is None or self.alpha_tol < 0:
                raise ValueError(f"{self.mode} needs alpha_tol >= 0")
            if self.C is not None:
                raise ValueError(f"C is not used by {self.mode}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def with_param(self, value):
        if self.mode == "smooth":
            return replace(self, C=float(value))
        return replace(self, alpha_tol=float(value))


@dataclass
class TrainRecord:
    t: int
    train_auc: float
    test_auc: float | None
    objective: float
    pricing_value: float
    n_prototypes: int
    wall_time: float
    newest_residual: float
    pi_min: float
    pi_max: float
    duality_gap: float
    cs_residual: float
    route_gap: float
    lp_iterations: int
    pricing_iterations: int
    weights: np.ndarray = field(repr=False, default=None)


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    def max_drop(self, name="test_auc", start=1) -> float:
        """Largest decrease between consecutive iterations from iteration ``start`` on."""
        vals = [v for r, v in zip(self.records, self.column(name)) if r.t >= start]
        drops = [a - b for a, b in zip(vals, vals[1:])]
        return max([0.0] + drops)


def _build(mode, cols, w_old, C):
    if mode == "smooth":
        return build_smooth_master(cols, w_old, C)
    if mode == "bounded_cg":
        return build_bounded_master(cols)
    return build_unbounded_master(cols)


def train_prototype_cg(train: Dataset, cfg: CgConfig, test: Dataset | None = None,
                       callback=None):
    """Grow prototypes by column generation; returns ``(PrototypeModel, TrainHistory)``.

    ``callback(t, master, solution)`` is invoked after every master solve.
    """
    train.require_both_classes()
    rng = np.random.default_rng(cfg.seed)
    cols = DistanceColumns.from_dataset(train, pair_cap=cfg.pair_cap, seed=cfg.seed)
    candidates = train.features
    if cfg.warm_start_sample is not None and cfg.warm_start_sample < train.n:
        pick = np.sort(rng.choice(train.n, cfg.warm_start_sample, replace=False))
        candidates = train.features[pick]
    q = train.features[int(rng.integers(train.n))].copy()
    max_iters = cfg.max_iters or min(200, train.n)
    history = TrainHistory()
    z_prev = 1e-6
    w_old = np.zeros(0)
    model = None
    t0 = time.perf_counter()
    for t in range(1, max_iters + 1):
        cols.append(q)
        mp = _build(cfg.mode, cols, w_old, cfg.C)
        sol = solve_master(mp)
        if callback is not None:
            callback(t, mp, sol)
        model = PrototypeModel(np.vstack(cols.prototypes), sol.w.copy(), mode=cfg.mode,
                               C=cfg.C, alpha_tol=cfg.alpha_tol, seed=cfg.seed)
        z = auc_of(model.decision_function(train.features), train.labels)
        test_auc = None if test is None else auc_of(model.decision_function(test.features),
                                                    test.labels)
        pp = PricingProblem.from_master(cols, sol.pi)
        q_new, value, p_iters = solve_pricing(pp, candidates, cfg.adam)
        nearest = np.sqrt(((np.vstack(cols.prototypes) - q_new) ** 2).sum(axis=1)).min()
        duplicate = nearest <= cfg.duplicate_tol
        if duplicate:
            value = 0.0
        rep = sol.lp_report
        history.records.append(TrainRecord(
            t=t, train_auc=z, test_auc=test_auc, objective=sol.objective,
            pricing_value=value, n_prototypes=len(cols), wall_time=time.perf_counter() - t0,
            newest_residual=sol.newest_residual,
            pi_min=float(sol.pi.min()) if sol.pi.size else 0.0,
            pi_max=float(sol.pi.max()) if sol.pi.size else 0.0,
            duality_gap=rep.duality_gap, cs_residual=rep.complementary_slackness,
            route_gap=sol.route_gap, lp_iterations=sol.iterations,
            pricing_iterations=p_iters, weights=sol.w.copy()))
        if cfg.mode == "smooth":
            if abs(z_prev - z) / z_prev < cfg.convergence_tol:
                history.stop_reason = "auc_ratio"
                break
            if duplicate:
                history.stop_reason = "duplicate"
                break
        elif duplicate or value / cols.n_pairs < cfg.alpha_tol or value <= cfg.zero_tol:
            history.stop_reason = "duplicate" if duplicate else "alpha"
            break
        w_old = sol.w
        z_prev = z
        q = q_new
    else:
        history.stop_reason = "max_iters"
    return model, history


def _dissimilarity_columns(train: Dataset):
    D = dissimilarity_matrix(train, train)
    cols = DistanceColumns.from_dataset(train)
    for j in range(train.n):
        cols.append_distances(train.features[j], D[:, j])
    return cols, D


def _l2_subgradient(F, pos, neg, C, iters=2000, checkpoint_every=100):
    """Averaged subgradient descent for ``0.5|w|^2 + C sum hinge(1 - w.(F_p - F_n))``.

    Step ``1/k`` (strong convexity 1).  The hinge subgradient is gathered
    per point: ``sum_viol (F_p - F_n) = sum_p cnt_p F_p - sum_n cnt_n F_n``.
    """
    n, k = F.shape
    w = np.zeros(k)
    w_sum = np.zeros(k)
    Fp, Fn = F[pos], F[neg]

    def objective(v):
        s = F @ v
        margin = s[pos][:, None] - s[neg][None, :]
        return 0.5 * float(v @ v) + C * float(np.maximum(0.0, 1.0 - margin).sum())

    checkpoints = []
    for it in range(1, iters + 1):
        s = F @ w
        viol = (s[pos][:, None] - s[neg][None, :]) < 1.0
        h = -(viol.sum(axis=1) @ Fp - viol.sum(axis=0) @ Fn)
        w = w - (w + C * h) / it
        w_sum += w
        if it % checkpoint_every == 0:
            val = objective(w_sum / it)
            if not np.isfinite(val):
                raise TrainingError("non-finite L2 ranking loss")
            checkpoints.append((it, val))
    return w_sum / iters, checkpoints


def train_linear_baseline(train: Dataset, reg: str, C: float) -> LinearDistanceModel:
    """Ranking SVM on the dissimilarity representation of ``train``.

    ``L1``: ``min sum|w| + C sum xi``; ``Linf``: ``min sum xi`` with
    ``|w_t| <= C``; ``L2``: averaged subgradient descent on the L2 hinge
    objective (an approximate solver).
    """
    if reg not in REGULARIZERS:
        raise ValueError(f"reg must be one of {REGULARIZERS}")
    if not C > 0:
        raise ValueError("C must be positive")
    train.require_both_classes()
    cols, D = _dissimilarity_columns(train)
    checkpoints = []
    if reg == "Linf":
        w = solve_master(build_bounded_master(cols, bound=C)).w
    elif reg == "L1":
        w = solve_master(build_l1_master(cols, C)).w
    else:
        w, checkpoints = _l2_subgradient(D, train.pos_idx, train.neg_idx, C)
    return LinearDistanceModel(train.features.copy(), w, reg=reg, C=float(C),
                               approximate=(reg == "L2"), checkpoints=checkpoints)


# -- serialization -----------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def model_to_text(model: DistanceModel) -> str:
    lines = [f"smoothrank-model {FORMAT_VERSION}"]
    if isinstance(model, PrototypeModel):
        meta = [("kind", "prototype"), ("mode", model.mode),
                ("C", "none" if model.C is None else _fmt(model.C)),
                ("alpha_tol", "none" if model.alpha_tol is None else _fmt(model.alpha_tol)),
                ("seed", str(int(model.seed)))]
    elif isinstance(model, LinearDistanceModel):
        meta = [("kind", "linear"), ("reg", model.reg), ("C", _fmt(model.C)),
                ("approximate", str(bool(model.approximate)).lower())]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    lines += [f"{k} {v}" for k, v in meta]
    lines.append(f"d {model.feature_dim}")
    lines.append(f"prototypes {model.n_prototypes}")
    lines += [" ".join(_fmt(v) for v in row) for row in model.prototypes]
    lines.append("weights")
    lines += [_fmt(v) for v in model.weights]
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> DistanceModel:
    lines = text.strip().splitlines()
    head = lines[0].split()
    if len(head) != 2 or head[0] != "smoothrank-model":
        raise ValueError("not a smoothrank model file")
    if int(head[1]) != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {head[1]}")
    meta = {}
    i = 1
    while not lines[i].startswith("prototypes "):
        key, val = lines[i].split(None, 1)
        meta[key] = val
        i += 1
    n_proto = int(lines[i].split()[1])
    d = int(meta["d"])
    Q = np.array([[float(v) for v in lines[i + 1 + r].split()] for r in range(n_proto)])
    Q = Q.reshape(n_proto, d)
    j = i + 1 + n_proto
    if lines[j] != "weights":
        raise ValueError("malformed model file: missing weights section")
    w = np.array([float(v) for v in lines[j + 1:j + 1 + n_proto]])

    def opt(v):
        return None if v == "none" else float(v)

    if meta["kind"] == "prototype":
        return PrototypeModel(Q, w, mode=meta["mode"], C=opt(meta["C"]),
                              alpha_tol=opt(meta["alpha_tol"]), seed=int(meta["seed"]))
    if meta["kind"] == "linear":
        return LinearDistanceModel(Q, w, reg=meta["reg"], C=float(meta["C"]),
                                   approximate=meta["approximate"] == "true")
    raise ValueError(f"unknown model kind {meta['kind']!r}")


def save_model(model: DistanceModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> DistanceModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_text(fh.read())


__all__ = ["CgConfig", "PrototypeModel", "LinearDistanceModel", "TrainHistory",
           "TrainRecord", "train_prototype_cg", "train_linear_baseline", "score",
           "save_model", "load_model", "model_to_text", "model_from_text"]
