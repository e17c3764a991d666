"""Pure Python/NumPy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation (same summation order,
same libm calls) so both backends return bit-identical results.
"""

import math

import numpy as np


def sequential_draw(weights, uniforms):
    """Sequential weighted draws without replacement.

    ``uniforms`` has shape ``(trials, k)``; row ``t`` drives one sample of
    ``k`` distinct indices into ``weights``.  Draw ``j`` picks the first
    index whose running sum of remaining weights exceeds
    ``uniforms[t, j] * total_remaining``.
    """
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    trials, k = uniforms.shape
    n = len(weights)
    out = np.empty((trials, k), dtype=np.int64)
    for t in range(trials):
        w = weights.copy()
        for j in range(k):
            c = np.cumsum(w)
            target = uniforms[t, j] * c[-1]
            idx = int(np.searchsorted(c, target, side="right"))
            if idx >= n:
                idx = int(np.flatnonzero(w > 0.0)[-1])
            out[t, j] = idx
            w[idx] = 0.0
    return out


def _excess(s, sizes, weights, k):
    acc = 0.0
    for m, w in zip(sizes, weights):
        acc += m * -math.expm1(-s * w)
    return acc - k


def wallenius_log_root(sizes, weights, k):
    """Root ``s >= 0`` of ``sum(m_i * (1 - exp(-s * w_i))) = k``.

    Requires ``0 < k < sum(sizes)``.  Bisection down to adjacent doubles.
    """
    sizes = [float(x) for x in sizes]
    weights = [float(x) for x in weights]
    k = float(k)
    lo, hi = 0.0, 1.0
    while _excess(hi, sizes, weights, k) < 0.0 and hi < 1e300:
        lo = hi
        hi *= 2.0
    for _ in range(2200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _excess(mid, sizes, weights, k) < 0.0:
            lo = mid
        else:
            hi = mid
    if abs(_excess(lo, sizes, weights, k)) <= abs(_excess(hi, sizes, weights, k)):
        return lo
    return hi
