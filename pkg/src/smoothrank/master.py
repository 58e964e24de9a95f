"""Master linear programs over a growing set of distance columns.

Every master problem shares the pairwise soft-margin rows

    sum_t w_t * Delta[t, r] + xi_r >= 1,     xi_r >= 0,

where ``r`` runs over (positive, negative) pairs in row-major order and
``Delta[t, r] = D[t, p] - D[t, n]``.  The variants differ in how ``w`` is
regularized:

``bounded``    ``-B <= w_t <= B``                      (B = 1 for column generation)
``unbounded``  ``w`` free
``smooth``     ``w`` free, objective adds ``C * sum_t |w_t - w_old_t|`` over old columns
``l1``         objective ``sum_t |w_t| + C * sum xi``

The primal of each variant has one row per pair, so it is solved through
its dual, whose rows are indexed by columns.  The dual multipliers of the
dual rows are the weights ``w``; the dual variables on the pairs are ``pi``.
``route="primal"`` solves the primal form directly, which is only practical
for small instances and serves as a cross-check.
"""

from __future__ import annotations

import contextlib
import threading
from dataclasses import dataclass, field

import numpy as np

from smoothrank import kernels
from smoothrank.lp import (INF, CertificateReport, LinearProgram, SolverOptions, Status,
                           solve, verify_certificates)

KINDS = ("bounded", "unbounded", "smooth", "l1")

_recorders: list[list] = []
_recorders_lock = threading.Lock()


@contextlib.contextmanager
def record_solves():
    """Collect every :class:`MasterSolution` produced while the block runs."""
    log: list = []
    with _recorders_lock:
        _recorders.append(log)
    try:
        yield log
    finally:
        with _recorders_lock:
            _recorders.remove(log)


class MasterError(RuntimeError):
    """The master LP did not reach an optimal solution."""


class DistanceColumns:
    """Distances from every training point to each prototype, one column per prototype.

    Append-only.  ``pairs`` default to the full positive x negative cross
    product; ``pair_cap`` draws a fixed random subset instead (memory guard).
    """

    def __init__(self, X, pos_idx, neg_idx, pair_cap: int | None = None, seed: int = 0):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.pos_idx = np.asarray(pos_idx, dtype=np.int64)
        self.neg_idx = np.asarray(neg_idx, dtype=np.int64)
        if len(self.pos_idx) == 0 or len(self.neg_idx) == 0:
            raise ValueError("both classes are needed to form pairs")
        pp = np.repeat(self.pos_idx, len(self.neg_idx))
        nn = np.tile(self.neg_idx, len(self.pos_idx))
        if pair_cap is not None and pair_cap < len(pp):
            keep = np.sort(np.random.default_rng(seed).choice(len(pp), pair_cap, replace=False))
            pp, nn = pp[keep], nn[keep]
        self.pair_pos = pp
        self.pair_neg = nn
        self.prototypes: list[np.ndarray] = []
        self.D: list[np.ndarray] = []

    @classmethod
    def from_dataset(cls, ds, **kw):
        return cls(ds.features, ds.pos_idx, ds.neg_idx, **kw)

    @property
    def n_pairs(self) -> int:
        return len(self.pair_pos)

    def __len__(self):
        return len(self.D)

    def append(self, q):
        q = np.array(q, dtype=np.float64).ravel()
        if q.shape != (self.X.shape[1],):
            raise ValueError(f"prototype has dimension {q.size}, data has {self.X.shape[1]}")
        col = kernels.pairwise_distances(self.X, q[None, :])[:, 0]
        self.prototypes.append(q)
        self.D.append(col)

    def append_distances(self, q, col):
        """Add a column with precomputed distances (e.g. a dissimilarity matrix column)."""
        self.prototypes.append(np.asarray(q, dtype=np.float64))
        self.D.append(np.asarray(col, dtype=np.float64))

    def delta(self, t: int) -> np.ndarray:
        d = self.D[t]
        return d[self.pair_pos] - d[self.pair_neg]

    def delta_matrix(self) -> np.ndarray:
        """``Delta`` with one row per column and one entry per pair."""
        if not self.D:
            return np.zeros((0, self.n_pairs))
        D = np.vstack(self.D)
        return D[:, self.pair_pos] - D[:, self.pair_neg]


@dataclass
class MasterProblem:
    """A master problem: its data plus the primal LP, built on first access.

    The primal has one row and one slack per pair, so it is only
    materialized when asked for (export, primal route, tests).
    """

    kind: str
    cols: DistanceColumns
    n_cols: int
    w_old: np.ndarray
    C: float
    bound: float
    _lp: LinearProgram | None = field(default=None, repr=False)

    @property
    def lp(self) -> LinearProgram:
        if self._lp is None:
            Delta = self.cols.delta_matrix()[:self.n_cols]
            self._lp = _primal(self.kind, Delta, self.w_old, self.C, self.bound)
        return self._lp

    @property
    def n_pairs(self):
        return self.cols.n_pairs

    def var_slices(self):
        T, R = self.n_cols, self.n_pairs
        n_s = {"smooth": T - 1, "l1": T}.get(self.kind, 0)
        return slice(0, T), slice(T, T + R), slice(T + R, T + R + n_s)


@dataclass
class MasterSolution:
    w: np.ndarray
    xi_sum: float
    penalty: float
    objective: float
    pi: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    dual_residuals: np.ndarray
    lp_report: CertificateReport
    route_gap: float
    iterations: int
    extra: dict = field(default_factory=dict)

    @property
    def newest_residual(self) -> float:
        return float(abs(self.dual_residuals[-1])) if self.dual_residuals.size else 0.0


def _check_cols(cols: DistanceColumns, n_cols):
    T = len(cols) if n_cols is None else n_cols
    if T < 1:
        raise ValueError("the master problem needs at least one prototype column")
    if T > len(cols):
        raise ValueError(f"{T} columns requested, only {len(cols)} available")
    return T


def _primal(kind, Delta, w_old, C, bound):
    T, R = Delta.shape
    if kind == "smooth":
        n_s = T - 1
    elif kind == "l1":
        n_s = T
    else:
        n_s = 0
    nv = T + R + n_s
    cost = np.zeros(nv)
    cost[T:T + R] = C if kind == "l1" else 1.0
    if kind == "smooth":
        cost[T + R:] = C
    elif kind == "l1":
        cost[T + R:] = 1.0
    lo = np.concatenate([np.full(T, -INF), np.zeros(R + n_s)])
    up = np.full(nv, INF)
    if kind == "bounded":
        lo[:T] = -bound
        up[:T] = bound
    rows = [np.hstack([Delta.T, np.eye(R), np.zeros((R, n_s))])]
    rhs = [np.ones(R)]
    names = [f"M{r}" for r in range(R)]
    if n_s:
        S = np.eye(n_s)
        W = np.zeros((n_s, T))
        W[np.arange(n_s), np.arange(n_s)] = 1.0
        rows.append(np.hstack([-W, np.zeros((n_s, R)), S]))
        rows.append(np.hstack([W, np.zeros((n_s, R)), S]))
        if kind == "smooth":
            rhs += [-w_old, w_old]
        else:
            rhs += [np.zeros(n_s), np.zeros(n_s)]
        names += [f"SM{t}" for t in range(n_s)] + [f"SP{t}" for t in range(n_s)]
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    var_names = tuple([f"W{t}" for t in range(T)] + [f"XI{r}" for r in range(R)]
                      + [f"S{t}" for t in range(n_s)])
    return LinearProgram(cost, A, [">="] * len(b), b, lo, up, var_names, tuple(names))


def build_bounded_master(cols: DistanceColumns, n_cols: int | None = None,
                         bound: float = 1.0) -> MasterProblem:
    """Pairwise hinge LP with box-bounded weights ``-bound <= w <= bound``."""
    T = _check_cols(cols, n_cols)
    if not bound > 0:
        raise ValueError("weight bound must be positive")
    return MasterProblem("bounded", cols, T, np.zeros(0), 0.0, float(bound))


def build_unbounded_master(cols: DistanceColumns, n_cols: int | None = None) -> MasterProblem:
    T = _check_cols(cols, n_cols)
    return MasterProblem("unbounded", cols, T, np.zeros(0), 0.0, INF)


def build_smooth_master(cols: DistanceColumns, w_old, C: float,
                        n_cols: int | None = None) -> MasterProblem:
    """Hinge LP with free weights and an L1 penalty ``C`` on changes of the old weights."""
    T = _check_cols(cols, n_cols)
    w_old = np.asarray(w_old, dtype=np.float64).ravel()
    if w_old.size != T - 1:
        raise ValueError(f"w_old has length {w_old.size}, expected {T - 1}")
    if C < 0:
        raise ValueError("smoothing parameter C must be >= 0")
    return MasterProblem("smooth", cols, T, w_old, float(C), INF)


def build_l1_master(cols: DistanceColumns, C: float, n_cols: int | None = None) -> MasterProblem:
    """``min sum|w| + C * sum xi`` over the pairwise margin rows."""
    T = _check_cols(cols, n_cols)
    if C <= 0:
        raise ValueError("C must be positive")
    return MasterProblem("l1", cols, T, np.zeros(0), float(C), INF)


def dual_lp(mp: MasterProblem) -> LinearProgram:
    """The dual of ``mp`` written as a minimization over ``(pi, extra columns)``.

    Rows ``E_t`` (one per weight) are equalities; their multipliers are
    ``-w_t``.  For the smooth master, rows ``G_t`` bound ``alpha_t + beta_t
    <= C``.
    """
    Delta = mp.cols.delta_matrix()[:mp.n_cols]
    T, R = Delta.shape
    kind = mp.kind
    if kind == "smooth":
        n_old = T - 1
        I = np.zeros((T, n_old))
        I[np.arange(n_old), np.arange(n_old)] = 1.0
        top = np.hstack([Delta, -I, I])
        bottom = np.hstack([np.zeros((n_old, R)), np.eye(n_old), np.eye(n_old)])
        A = np.vstack([top, bottom])
        b = np.concatenate([np.zeros(T), np.full(n_old, mp.C)])
        senses = ["="] * T + ["<="] * n_old
        c = np.concatenate([-np.ones(R), mp.w_old, -mp.w_old])
        lo = np.zeros(R + 2 * n_old)
        up = np.concatenate([np.ones(R), np.full(2 * n_old, INF)])
    elif kind == "bounded":
        A = np.hstack([Delta, -np.eye(T), np.eye(T)])
        b = np.zeros(T)
        senses = ["="] * T
        c = np.concatenate([-np.ones(R), np.full(2 * T, mp.bound)])
        lo = np.zeros(R + 2 * T)
        up = np.concatenate([np.ones(R), np.full(2 * T, INF)])
    elif kind == "unbounded":
        A, b, senses = Delta, np.zeros(T), ["="] * T
        c, lo, up = -np.ones(R), np.zeros(R), np.ones(R)
    elif kind == "l1":
        A = np.hstack([Delta, -np.eye(T)])
        b = np.zeros(T)
        senses = ["="] * T
        c = np.concatenate([-np.ones(R), np.zeros(T)])
        lo = np.concatenate([np.zeros(R), -np.ones(T)])
        up = np.concatenate([np.full(R, mp.C), np.ones(T)])
    else:
        raise ValueError(f"unknown master kind {kind!r}")
    return LinearProgram(c, A, senses, b, lo, up)


def primal_objective(mp: MasterProblem, w, Delta=None):
    """``(xi_sum, penalty)`` of weights ``w``, with optimal slacks."""
    if Delta is None:
        Delta = mp.cols.delta_matrix()[:mp.n_cols]
    xi = np.maximum(0.0, 1.0 - w @ Delta)
    if mp.kind == "smooth":
        return float(xi.sum()), mp.C * float(np.abs(w[:-1] - mp.w_old).sum())
    if mp.kind == "l1":
        return mp.C * float(xi.sum()), float(np.abs(w).sum())
    return float(xi.sum()), 0.0


def _residuals(kind, Delta, pi, alpha, beta):
    g = Delta @ pi
    if kind == "smooth":
        g[:-1] += -alpha + beta
    elif kind == "bounded":
        g += -alpha + beta
    elif kind == "l1":
        g -= alpha
    return g


def solve_master(mp: MasterProblem, route: str = "dual",
                 opts: SolverOptions | None = None) -> MasterSolution:
    """Solve ``mp`` and return weights, slacks and the dual multipliers.

    For ``smooth``, ``alpha``/``beta`` are the multipliers of the
    ``s - w >= -w_old`` and ``s + w >= w_old`` rows; for ``bounded`` they are
    the multipliers of the upper and lower weight bounds; for ``l1``
    ``alpha`` holds ``sum_r pi_r Delta[t, r]``.
    """
    Delta = mp.cols.delta_matrix()[:mp.n_cols]
    T, R = Delta.shape
    if mp._lp is not None and mp._lp.k != T + R + {"smooth": T - 1, "l1": T}.get(mp.kind, 0):
        raise ValueError("master LP does not match its index maps")
    if mp.kind == "smooth" and mp.w_old.size != T - 1:
        raise ValueError("w_old does not match the number of old columns")
    if route == "dual":
        lp = dual_lp(mp)
        sol = solve(lp, opts)
        if sol.status is not Status.OPTIMAL:
            raise MasterError(f"{mp.kind} master (dual form): {sol.status.value} "
                              f"after {sol.iterations} iterations {sol.message}".strip())
        report = verify_certificates(lp, sol)
        w = -sol.y[:T]
        pi = sol.x[:R].copy()
        if mp.kind == "smooth":
            alpha, beta = sol.x[R:R + T - 1].copy(), sol.x[R + T - 1:].copy()
        elif mp.kind == "bounded":
            alpha, beta = sol.x[R:R + T].copy(), sol.x[R + T:].copy()
        elif mp.kind == "l1":
            alpha, beta = sol.x[R:].copy(), np.zeros(0)
        else:
            alpha = beta = np.zeros(0)
        dual_value = -sol.objective
    elif route == "primal":
        sol = solve(mp.lp, opts)
        if sol.status is not Status.OPTIMAL:
            raise MasterError(f"{mp.kind} master: {sol.status.value} "
                              f"after {sol.iterations} iterations {sol.message}".strip())
        report = verify_certificates(mp.lp, sol)
        ws, _, _ = mp.var_slices()
        w = sol.x[ws].copy()
        pi = sol.y[:R].copy()
        if mp.kind == "smooth":
            alpha, beta = sol.y[R:R + T - 1].copy(), sol.y[R + T - 1:].copy()
        elif mp.kind == "bounded":
            d = sol.reduced_costs[:T]
            alpha, beta = np.maximum(-d, 0.0), np.maximum(d, 0.0)
        elif mp.kind == "l1":
            alpha, beta = Delta @ pi, np.zeros(0)
        else:
            alpha = beta = np.zeros(0)
        dual_value = sol.objective
    else:
        raise ValueError(f"unknown route {route!r}")
    xi_sum, penalty = primal_objective(mp, w, Delta)
    objective = xi_sum + penalty
    route_gap = abs(objective - dual_value) / (1.0 + abs(objective))
    res = _residuals(mp.kind, Delta, pi, alpha, beta)
    out = MasterSolution(w=w, xi_sum=xi_sum, penalty=penalty, objective=objective, pi=pi,
                         alpha=alpha, beta=beta, dual_residuals=res, lp_report=report,
                         route_gap=route_gap, iterations=sol.iterations,
                         extra={"kind": mp.kind, "route": route})
    if _recorders:
        with _recorders_lock:
            for log in _recorders:
                log.append(out)
    return out
