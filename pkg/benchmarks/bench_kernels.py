"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--d 8] [--repeat 5]

Each kernel is run on identical inputs with both backends; the table
reports the best wall time of ``--repeat`` runs and the speedup.
"""

import argparse
import sys
import timeit

import numpy as np

from smoothrank import kernels


def cases(n, d, rng):
    X = rng.normal(size=(n, d))
    c = rng.normal(size=n)
    c -= c.mean()
    q = rng.normal(size=d)
    Q = rng.normal(size=(200, d))
    adam = (X, c, X[0].copy(), 1e-3, 0.9, 0.999, 1e-8, 200, 0.0)
    return {
        "pairwise_distances": lambda k: k.pairwise_distances(X, Q),
        "pricing_value": lambda k: k.pricing_value(X, c, q),
        "pricing_value_grad": lambda k: k.pricing_value_grad(X, c, q),
        "adam_ascent (200 steps)": lambda k: k.adam_ascent(*adam),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not available; build with "
              "`pip install --no-build-isolation -e .`", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    rows = [("kernel", "numpy [ms]", "cython [ms]", "speedup")]
    for name, fn in cases(args.n, args.d, rng).items():
        t = {}
        for label, impl in (("py", kernels.python), ("c", kernels.compiled)):
            fn(impl)
            t[label] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        rows.append((name, f"{1e3 * t['py']:.3f}", f"{1e3 * t['c']:.3f}",
                     f"{t['py'] / t['c']:.1f}x"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    print(f"n={args.n} d={args.d}")
    for r in rows:
        print("  ".join([r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
