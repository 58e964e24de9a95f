"""Instance generators and independent oracles shared by the tests."""

import itertools

import numpy as np

from smoothrank.lp import LinearProgram

ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    """Register a pass/fail line for the acceptance summary and print it."""
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_bounded_lp(rng, k, m, free_frac=0.0):
    """A feasible LP with box bounds (optionally some free variables)."""
    A = rng.normal(size=(m, k))
    A[rng.random((m, k)) < 0.3] = 0.0
    lo = -rng.uniform(0.1, 3.0, k)
    up = rng.uniform(0.1, 3.0, k)
    free = rng.random(k) < free_frac
    x0 = np.where(free, rng.normal(size=k), lo + (up - lo) * rng.random(k))
    lo[free], up[free] = -np.inf, np.inf
    senses = rng.choice(["<=", ">=", "="], m, p=[0.4, 0.4, 0.2])
    ax = A @ x0
    s = rng.uniform(0.0, 1.0, m)
    b = np.where(senses == "<=", ax + s, np.where(senses == ">=", ax - s, ax))
    return LinearProgram(rng.normal(size=k), A, list(senses), b, lo, up)


def vertex_enumeration(lp, tol=1e-9):
    """Minimum of ``c @ x`` over all basic feasible points.

    Exact for bounded LPs whose feasible region has a vertex.
    """
    k = lp.k
    G, h = [], []
    for i, s in enumerate(lp.senses):
        G.append(lp.A[i])
        h.append(lp.b[i])
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        for bound in (lp.lower[j], lp.upper[j]):
            if np.isfinite(bound):
                G.append(e)
                h.append(bound)
    G, h = np.array(G), np.array(h)
    best = np.inf
    for rows in itertools.combinations(range(len(G)), k):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if not is_feasible(lp, x, tol):
            continue
        best = min(best, float(lp.c @ x))
    return best


def is_feasible(lp, x, tol=1e-9):
    ax = lp.A @ x
    for i, s in enumerate(lp.senses):
        scale = 1.0 + abs(lp.b[i])
        if s == "<=" and ax[i] > lp.b[i] + tol * scale:
            return False
        if s == ">=" and ax[i] < lp.b[i] - tol * scale:
            return False
        if s == "=" and abs(ax[i] - lp.b[i]) > tol * scale:
            return False
    return bool(np.all(x >= lp.lower - tol) and np.all(x <= lp.upper + tol))


def central_difference(f, q, h=1e-6):
    g = np.zeros_like(q)
    for j in range(len(q)):
        e = np.zeros_like(q)
        e[j] = h
        g[j] = (f(q + e) - f(q - e)) / (2 * h)
    return g


def random_pricing_problem(rng, n_pos=6, n_neg=8, d=3):
    """Points and pair duals ``pi`` drawn in [0, 1]."""
    X = rng.normal(size=(n_pos + n_neg, d))
    pos = np.arange(n_pos)
    neg = np.arange(n_pos, n_pos + n_neg)
    pp = np.repeat(pos, n_neg)
    nn = np.tile(neg, n_pos)
    pi = rng.random(len(pp))
    return X, pp, nn, pi


def random_away_points(rng, X, count, min_dist=1e-3, scale=2.0):
    out = []
    while len(out) < count:
        q = rng.normal(size=X.shape[1]) * scale
        if np.min(np.linalg.norm(X - q, axis=1)) >= min_dist:
            out.append(q)
    return out


def separable_clusters(n_per=15, d=2, gap=4.0, seed=0):
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(n_per, d)) * 0.3
    neg = rng.normal(size=(n_per, d)) * 0.3 + gap
    return np.vstack([pos, neg]), np.array([1] * n_per + [-1] * n_per)
