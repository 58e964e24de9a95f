"""Hot kernels, compiled when available.

``BACKEND`` is ``"cython"`` when the extension imported, else ``"python"``.
Set ``SMOOTHRANK_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from smoothrank.kernels import _pykernels as python

if os.environ.get("SMOOTHRANK_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from smoothrank.kernels import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

pairwise_distances = _impl.pairwise_distances
pricing_value = _impl.pricing_value
pricing_value_grad = _impl.pricing_value_grad
adam_ascent = _impl.adam_ascent

__all__ = ["BACKEND", "python", "compiled", "pairwise_distances", "pricing_value",
           "pricing_value_grad", "adam_ascent"]
