"""Column-generation pricing: find a point whose distance column violates dual feasibility.

For pair duals ``pi`` the violation of a candidate prototype ``q`` is

    f(q) = sum_{p,n} pi_{p,n} (||x_p - q|| - ||x_n - q||) = sum_i c_i ||x_i - q||

with per-point coefficients ``c_p = sum_n pi_{p,n}`` and
``c_n = -sum_p pi_{p,n}``.  Pricing maximizes ``|f|``, starting from the
best training point and refining with Adam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smoothrank import kernels


@dataclass(frozen=True)
class AdamConfig:
    step_size: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_iters: int = 1000
    rel_obj_tol: float = 1e-5

    def __post_init__(self):
        vals = (self.step_size, self.beta1, self.beta2, self.epsilon, self.rel_obj_tol)
        if min(vals) <= 0 or self.max_iters < 0:
            raise ValueError("Adam parameters must be positive")
        if self.rel_obj_tol >= 1 or self.beta1 >= 1 or self.beta2 >= 1:
            raise ValueError("beta1, beta2 and rel_obj_tol must be < 1")


class PricingProblem:
    """Dual weights over pairs reduced to one coefficient per data point."""

    def __init__(self, X, coef):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.coef = np.ascontiguousarray(coef, dtype=np.float64)
        if self.coef.shape != (self.X.shape[0],):
            raise ValueError("one coefficient per data point is required")

    @classmethod
    def from_pairs(cls, X, pair_pos, pair_neg, pi) -> "PricingProblem":
        pi = np.asarray(pi, dtype=np.float64)
        if np.any(np.isnan(pi)):
            raise ValueError("NaN dual values")
        n = len(X)
        coef = np.bincount(pair_pos, weights=pi, minlength=n) \
            - np.bincount(pair_neg, weights=pi, minlength=n)
        return cls(X, coef)

    @classmethod
    def from_master(cls, cols, pi) -> "PricingProblem":
        return cls.from_pairs(cols.X, cols.pair_pos, cols.pair_neg, pi)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def _q(self, q):
        q = np.ascontiguousarray(q, dtype=np.float64).ravel()
        if q.shape != (self.d,):
            raise ValueError(f"point has dimension {q.size}, expected {self.d}")
        if np.any(np.isnan(q)):
            raise ValueError("NaN coordinates")
        return q

    def signed_value(self, q) -> float:
        return kernels.pricing_value(self.X, self.coef, self._q(q))


def pricing_objective(pp: PricingProblem, q) -> float:
    """Dual-feasibility violation ``|f(q)|`` of a candidate prototype."""
    return abs(pp.signed_value(q))


def pricing_objective_pairs(X, pair_pos, pair_neg, pi, q) -> float:
    """Literal double-sum form of :func:`pricing_objective` (reference only)."""
    dist = np.sqrt(((np.asarray(X) - np.asarray(q)) ** 2).sum(axis=1))
    return abs(float(np.sum(np.asarray(pi) * (dist[pair_pos] - dist[pair_neg]))))


def pricing_gradient(pp: PricingProblem, q) -> np.ndarray:
    """Gradient of ``|f|`` at ``q``.

    Terms for data points within 1e-12 of ``q`` are dropped (the zero
    subgradient at the kink).  At ``f(q) == 0`` the ``+grad f`` branch is used.
    """
    _, g = kernels.pricing_value_grad(pp.X, pp.coef, pp._q(q))
    return np.asarray(g)


def warm_start(pp: PricingProblem, candidates):
    """Best candidate row by ``|f|``; ties go to the lowest index."""
    cand = np.ascontiguousarray(candidates, dtype=np.float64)
    if cand.ndim != 2 or cand.shape[0] == 0:
        raise ValueError("warm start needs at least one candidate")
    if cand.shape[1] != pp.d:
        raise ValueError("candidate dimension mismatch")
    # |f| at all candidates: distances candidates x data, times coefficients
    vals = np.abs(kernels.pairwise_distances(cand, pp.X) @ pp.coef)
    i = int(np.argmax(vals))
    return cand[i].copy(), float(vals[i])


def solve_pricing(pp: PricingProblem, candidates, cfg: AdamConfig | None = None):
    """Warm start then Adam ascent on ``|f|``.

    Returns ``(q, value, iters)`` for the best iterate visited, which is
    never worse than the warm start.
    """
    cfg = cfg or AdamConfig()
    q0, v0 = warm_start(pp, candidates)
    if not np.any(pp.coef):
        return q0, v0, 0
    q, val, iters = kernels.adam_ascent(pp.X, pp.coef, q0, cfg.step_size, cfg.beta1,
                                        cfg.beta2, cfg.epsilon, cfg.max_iters,
                                        cfg.rel_obj_tol)
    q = np.asarray(q)
    val = pricing_objective(pp, q)
    if val < v0:
        return q0, v0, iters
    return q, val, iters
