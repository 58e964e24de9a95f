"""Pure numpy implementations of the hot kernels.

Reference semantics for ``_ckernels``; used whenever the compiled module is
unavailable or ``SMOOTHRANK_PURE_PYTHON`` is set.
"""

import numpy as np

KINK = 1e-12


def pairwise_distances(Q, R):
    out = np.empty((Q.shape[0], R.shape[0]))
    # chunked to bound the (rows, refs, d) temporary
    step = max(1, 2_000_000 // max(1, R.shape[0] * max(1, R.shape[1])))
    for s in range(0, Q.shape[0], step):
        diff = Q[s:s + step, None, :] - R[None, :, :]
        out[s:s + step] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def pricing_value(X, c, q):
    """Signed value ``sum_i c_i ||x_i - q||``."""
    dist = np.sqrt(((X - q) ** 2).sum(axis=1))
    return float(c @ dist)


def pricing_value_grad(X, c, q):
    """Signed value and the gradient of its absolute value."""
    diff = q - X
    dist = np.sqrt((diff ** 2).sum(axis=1))
    f = float(c @ dist)
    safe = dist >= KINK
    coef = np.zeros_like(dist)
    coef[safe] = c[safe] / dist[safe]
    g = coef @ diff
    return f, (g if f >= 0.0 else -g)


def adam_ascent(X, c, q0, lr, beta1, beta2, eps, max_iters, rel_tol):
    """Adam ascent on ``|f|`` from ``q0``; returns ``(best_q, best_value, iters)``."""
    q = np.array(q0, dtype=np.float64, copy=True)
    f, g = pricing_value_grad(X, c, q)
    best_val = abs(f)
    best_q = q.copy()
    if not np.any(c):
        return best_q, best_val, 0
    m = np.zeros_like(q)
    v = np.zeros_like(q)
    prev = best_val
    b1t = 1.0
    b2t = 1.0
    it = 0
    for it in range(1, max_iters + 1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        b1t *= beta1
        b2t *= beta2
        mhat = m / (1.0 - b1t)
        vhat = v / (1.0 - b2t)
        q = q + lr * mhat / (np.sqrt(vhat) + eps)
        f, g = pricing_value_grad(X, c, q)
        val = abs(f)
        if val > best_val:
            best_val = val
            best_q = q.copy()
        if prev == 0.0:
            change = 0.0 if val == 0.0 else np.inf
        else:
            change = abs(val - prev) / prev
        if change < rel_tol:
            break
        prev = val
    return best_q, best_val, it
