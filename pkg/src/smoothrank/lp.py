"""Dense bounded-variable revised simplex with primal and dual solutions.

Problems are always minimizations::

    min  c @ x
    s.t. A[i] @ x  (<=, >=, =)  b[i]
         lower <= x <= upper           (bounds may be infinite)

Each row gets a logical variable ``r_i`` with ``A[i] @ x + r_i = b[i]``;
its bounds encode the row sense.  Phase 1 adds artificial columns only for
rows whose logical cannot absorb the initial residual.  Duals follow the
usual minimization convention: ``y_i >= 0`` on ``>=`` rows, ``y_i <= 0`` on
``<=`` rows, free on equalities.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

INF = np.inf
SENSES = ("<=", ">=", "=")


class LpError(ValueError):
    """Malformed linear program."""


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: tuple | None = None
    row_names: tuple | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        b = np.array(self.b, dtype=float).ravel()
        A = np.array(self.A, dtype=float).reshape(len(b), len(c))
        lo = np.broadcast_to(np.array(self.lower, dtype=float), c.shape).copy()
        up = np.broadcast_to(np.array(self.upper, dtype=float), c.shape).copy()
        senses = tuple(self.senses)
        if len(senses) != len(b):
            raise LpError(f"{len(senses)} row senses for {len(b)} rows")
        bad = [s for s in senses if s not in SENSES]
        if bad:
            raise LpError(f"unknown row sense {bad[0]!r}")
        if np.any(lo > up):
            raise LpError("a variable has lower bound above upper bound")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)) or not np.all(np.isfinite(c)) \
                or not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise LpError("non-finite data")
        if np.any(lo == INF) or np.any(up == -INF):
            raise LpError("bounds cannot be +inf below or -inf above")
        for a in (c, b, A, lo, up):
            a.setflags(write=False)
        for name, val in (("c", c), ("b", b), ("A", A), ("lower", lo), ("upper", up),
                          ("senses", senses)):
            object.__setattr__(self, name, val)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]


@dataclass
class SolverOptions:
    tol_feas: float = 1e-9
    tol_opt: float = 1e-9
    tol_pivot: float = 1e-10
    refactor_every: int = 64
    max_iters: int | None = None          # default 50 * (m + k)
    bland_after: int | None = None        # default 3 * (m + k) degenerate pivots


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray
    y: np.ndarray
    objective: float
    iterations: int
    reduced_costs: np.ndarray = field(default=None)
    message: str = ""


@dataclass
class CertificateReport:
    primal_violation: float
    dual_violation: float
    duality_gap: float
    complementary_slackness: float
    primal_objective: float
    dual_objective: float

    def ok(self, tol=1e-7) -> bool:
        return max(self.primal_violation, self.dual_violation, self.duality_gap,
                   self.complementary_slackness) <= tol


class _Basis:
    """LU of a basis matrix plus a product-form eta file."""

    def __init__(self, Af, basis):
        self.Af = Af
        self.basis = basis
        self.refactor()

    def refactor(self):
        B = self.Af[:, self.basis]
        self.etas = []
        if B.shape[0] == 0:
            self.lu = None
            return
        self.lu = sla.lu_factor(B, check_finite=False)
        diag = np.abs(np.diag(self.lu[0]))
        if diag.size and diag.min() <= 1e-13 * max(1.0, diag.max()):
            raise np.linalg.LinAlgError("singular basis")

    def ftran(self, a):
        if self.lu is None:
            return np.zeros(0)
        v = sla.lu_solve(self.lu, a, check_finite=False)
        for r, alpha in self.etas:
            vr = v[r] / alpha[r]
            v -= vr * alpha
            v[r] = vr
        return v

    def btran(self, c):
        v = np.array(c, dtype=float)
        if self.lu is None:
            return v
        for r, alpha in reversed(self.etas):
            v[r] = (v[r] - (alpha @ v - alpha[r] * v[r])) / alpha[r]
        return sla.lu_solve(self.lu, v, trans=1, check_finite=False)

    def replace(self, r, j, alpha):
        self.basis[r] = j
        self.etas.append((r, alpha))


def _logical_bounds(senses):
    lo = np.array([0.0 if s in ("<=", "=") else -INF for s in senses])
    up = np.array([0.0 if s in (">=", "=") else INF for s in senses])
    return lo, up


def _initial_value(l, u):
    if np.isfinite(l):
        return l
    if np.isfinite(u):
        return u
    return 0.0


class _Simplex:
    def __init__(self, lp: LinearProgram, opts: SolverOptions):
        self.lp = lp
        self.opts = opts
        m, k = lp.m, lp.k
        llo, lup = _logical_bounds(lp.senses)
        x = np.array([_initial_value(l, u) for l, u in zip(lp.lower, lp.upper)])
        resid = lp.b - lp.A @ x if k else lp.b.copy()
        clip = np.clip(resid, llo, lup)
        need = np.flatnonzero(np.abs(resid - clip) > 0.0)
        sign = np.sign(resid[need] - clip[need])
        S = np.zeros((m, len(need)))
        S[need, np.arange(len(need))] = sign
        self.Af = np.hstack([lp.A, np.eye(m), S])
        self.n_struct = k
        self.n_art = len(need)
        self.lo = np.concatenate([lp.lower, llo, np.zeros(len(need))])
        self.up = np.concatenate([lp.upper, lup, np.full(len(need), INF)])
        self.x = np.concatenate([x, clip, np.abs(resid[need] - clip[need])])
        basis = list(range(k, k + m))
        for col, i in enumerate(need):
            basis[i] = k + m + col
        self.is_basic = np.zeros(self.Af.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.B = _Basis(self.Af, basis)
        self.iters = 0
        nk = m + k
        self.max_iters = opts.max_iters if opts.max_iters is not None else 50 * max(nk, 1)
        self.bland_after = opts.bland_after if opts.bland_after is not None else 3 * max(nk, 1)
        self.bland = False
        self.degenerate = 0

    def _recompute_basics(self):
        basis = self.B.basis
        xn = self.x.copy()
        xn[basis] = 0.0
        self.x[basis] = self.B.ftran(self.lp.b - self.Af @ xn)

    def _score(self, d):
        """Improvement rate of each nonbasic variable in its feasible direction."""
        x, lo, up = self.x, self.lo, self.up
        movable = ~self.is_basic & (lo < up)
        at_lo = movable & (x <= lo)
        at_up = movable & (x >= up) & ~at_lo
        free = movable & ~at_lo & ~at_up
        score = np.zeros_like(d)
        score[at_lo] = np.maximum(-d[at_lo], 0.0)
        score[at_up] = np.maximum(d[at_up], 0.0)
        score[free] = np.abs(d[free])
        return score

    def run(self, cost):
        """Iterate to optimality for ``cost``; returns a Status."""
        o = self.opts
        need_price = True
        while True:
            if self.iters >= self.max_iters:
                return Status.ITERATION_LIMIT
            if need_price:
                basis = self.B.basis
                y = self.B.btran(cost[basis])
                d = cost - self.Af.T @ y
                d[self.is_basic] = 0.0
                self.y, self.d = y, d
                score = self._score(d)
                need_price = False
            if self.bland:
                hits = score > o.tol_opt
                j = int(np.argmax(hits))
                if not hits[j]:
                    return Status.OPTIMAL
            else:
                j = int(np.argmax(score))
                if score[j] <= o.tol_opt:
                    return Status.OPTIMAL
            x, lo, up = self.x, self.lo, self.up
            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.B.ftran(self.Af[:, j])
            basis = np.asarray(self.B.basis, dtype=np.int64)
            delta = -direction * alpha
            xb, lb, ub = x[basis], lo[basis], up[basis]
            room = np.full(len(basis), INF)
            dec = delta < -o.tol_pivot
            inc = delta > o.tol_pivot
            with np.errstate(invalid="ignore"):
                room[dec] = np.maximum(xb[dec] - lb[dec], 0.0) / -delta[dec]
                room[inc] = np.maximum(ub[inc] - xb[inc], 0.0) / delta[inc]
            theta_b = room.min() if room.size else INF
            theta_f = up[j] - lo[j]
            self.iters += 1
            if not np.isfinite(theta_b) and not np.isfinite(theta_f):
                self.unbounded_dir = j
                return Status.UNBOUNDED
            if theta_f <= theta_b:
                # bound flip: the basis and therefore the duals stay unchanged
                x[j] = up[j] if direction > 0 else lo[j]
                x[basis] += delta * theta_f
                score[j] = 0.0
                self.degenerate = 0
                continue
            theta = theta_b
            ties = np.flatnonzero(room <= theta + 1e-12 * max(1.0, theta))
            if self.bland:
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = int(basis[r])
            x[j] += direction * theta
            x[basis] += delta * theta
            x[leaving] = lo[leaving] if delta[r] < 0 else up[leaving]
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.B.replace(r, j, alpha)
            if len(self.B.etas) >= o.refactor_every:
                self.B.refactor()
                self._recompute_basics()
            need_price = True
            if theta <= 1e-12:
                self.degenerate += 1
                if self.degenerate > self.bland_after:
                    self.bland = True
            else:
                self.degenerate = 0


def solve(lp: LinearProgram, opts: SolverOptions | None = None) -> LpSolution:
    """Solve ``lp``; deterministic for identical input."""
    opts = opts or SolverOptions()
    m, k = lp.m, lp.k
    try:
        sx = _Simplex(lp, opts)
        n_tot = sx.Af.shape[1]
        if sx.n_art:
            cost1 = np.zeros(n_tot)
            cost1[k + m:] = 1.0
            st = sx.run(cost1)
            if st is Status.ITERATION_LIMIT:
                return _result(lp, sx, st, "iteration limit in phase 1")
            infeas = float(sx.x[k + m:].sum())
            scale = 1.0 + float(np.abs(lp.b).max(initial=0.0))
            if infeas > opts.tol_feas * scale * 10:
                return _result(lp, sx, Status.INFEASIBLE, f"phase 1 infeasibility {infeas:.3e}")
            sx.up[k + m:] = 0.0
            sx.x[k + m:] = np.minimum(sx.x[k + m:], 0.0)
        cost2 = np.zeros(n_tot)
        cost2[:k] = lp.c
        st = sx.run(cost2)
        if st is not Status.OPTIMAL:
            return _result(lp, sx, st, "")
        # clean solve from a fresh factorization before reporting Optimal
        sx.B.refactor()
        sx._recompute_basics()
        st = sx.run(cost2)
        if st is not Status.OPTIMAL:
            return _result(lp, sx, st, "")
    except np.linalg.LinAlgError as exc:
        x = np.zeros(k)
        return LpSolution(Status.ITERATION_LIMIT, x, np.zeros(m), float("nan"), 0,
                          np.zeros(k), f"numerical breakdown: {exc}")
    sol = _result(lp, sx, Status.OPTIMAL, "")
    rep = verify_certificates(lp, sol)
    scale = 1.0 + float(np.abs(lp.b).max(initial=0.0)) + float(np.abs(lp.c).max(initial=0.0))
    if rep.primal_violation > 1e-6 * scale or rep.dual_violation > 1e-6 * scale:
        sol.status = Status.ITERATION_LIMIT
        sol.message = (f"numerical breakdown: primal violation {rep.primal_violation:.2e}, "
                       f"dual violation {rep.dual_violation:.2e}")
    return sol


def _result(lp, sx, status, message):
    k = lp.k
    x = sx.x[:k].copy()
    y = getattr(sx, "y", np.zeros(lp.m))
    d = lp.c - lp.A.T @ y if k else np.zeros(0)
    obj = float(lp.c @ x) if k else 0.0
    if status is Status.UNBOUNDED:
        obj = -INF
    return LpSolution(status, x, np.array(y, dtype=float), obj, sx.iters, d, message)


def verify_certificates(lp: LinearProgram, sol: LpSolution) -> CertificateReport:
    """Primal/dual feasibility, duality gap and complementary slackness of ``sol``.

    The gap is relative, ``|c@x - dual| / (1 + |c@x|)``; the other entries
    are absolute.
    """
    x, y = sol.x, sol.y
    Ax = lp.A @ x
    slack = Ax - lp.b
    viol = 0.0
    cs = 0.0
    dviol = 0.0
    for i, s in enumerate(lp.senses):
        if s == ">=":
            viol = max(viol, -slack[i])
            dviol = max(dviol, -y[i])
        elif s == "<=":
            viol = max(viol, slack[i])
            dviol = max(dviol, y[i])
        else:
            viol = max(viol, abs(slack[i]))
        if s != "=":
            cs = max(cs, abs(y[i] * slack[i]))
    if len(x):
        viol = max(viol, float(np.max(lp.lower - x)), float(np.max(x - lp.upper)))
    d = lp.c - lp.A.T @ y
    dpos = np.maximum(d, 0.0)
    dneg = np.maximum(-d, 0.0)
    lo_fin = np.isfinite(lp.lower)
    up_fin = np.isfinite(lp.upper)
    if len(x):
        dviol = max(dviol, float(np.max(np.where(lo_fin, 0.0, dpos))),
                    float(np.max(np.where(up_fin, 0.0, dneg))))
        cs_lo = np.where(lo_fin, dpos * np.abs(x - np.where(lo_fin, lp.lower, 0.0)), 0.0)
        cs_up = np.where(up_fin, dneg * np.abs(np.where(up_fin, lp.upper, 0.0) - x), 0.0)
        cs = max(cs, float(cs_lo.max()), float(cs_up.max()))
    bound_terms = float(np.sum(np.where(lo_fin, dpos * np.where(lo_fin, lp.lower, 0.0), 0.0))
                        - np.sum(np.where(up_fin, dneg * np.where(up_fin, lp.upper, 0.0), 0.0)))
    dual_obj = float(lp.b @ y) + bound_terms
    prim_obj = float(lp.c @ x)
    gap = abs(prim_obj - dual_obj) / (1.0 + abs(prim_obj))
    return CertificateReport(float(max(viol, 0.0)), float(max(dviol, 0.0)), gap, cs,
                             prim_obj, dual_obj)


def write_mps(lp: LinearProgram, path, name="LP"):
    """Export in fixed-column MPS for cross-checking with other solvers."""
    vn = lp.var_names or tuple(f"X{j}" for j in range(lp.k))
    rn = lp.row_names or tuple(f"R{i}" for i in range(lp.m))
    code = {"<=": "L", ">=": "G", "=": "E"}

    def num(v):
        return f"{v:.12g}"[:12]

    lines = [f"NAME          {name}", "ROWS", " N  COST"]
    lines += [f" {code[s]}  {r}" for s, r in zip(lp.senses, rn)]
    lines.append("COLUMNS")
    for j in range(lp.k):
        entries = [("COST", lp.c[j])] if lp.c[j] != 0 else []
        entries += [(rn[i], lp.A[i, j]) for i in np.flatnonzero(lp.A[:, j])]
        for rname, v in entries:
            lines.append(f"    {vn[j]:<8}  {rname:<8}  {num(v):>12}")
    lines.append("RHS")
    for i in np.flatnonzero(lp.b):
        lines.append(f"    {'RHS':<8}  {rn[i]:<8}  {num(lp.b[i]):>12}")
    lines.append("BOUNDS")
    for j in range(lp.k):
        lo, up = lp.lower[j], lp.upper[j]
        if lo == -INF and up == INF:
            lines.append(f" FR BND       {vn[j]:<8}")
            continue
        if lo == up:
            lines.append(f" FX BND       {vn[j]:<8}  {num(lo):>12}")
            continue
        if lo == -INF:
            lines.append(f" MI BND       {vn[j]:<8}")
        elif lo != 0.0:
            lines.append(f" LO BND       {vn[j]:<8}  {num(lo):>12}")
        if up != INF:
            lines.append(f" UP BND       {vn[j]:<8}  {num(up):>12}")
    lines.append("ENDATA")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
