"""Monotone-chain hull kernel (pure-Python fallback).

Keep arithmetic-identical to ``_envelope_core.pyx``: same pop test, same
tolerance, same float expressions, so both backends return identical nodes.
"""

from __future__ import annotations

import numpy as np


def hull_nodes(y, lower: bool) -> np.ndarray:
    values = [float(v) for v in y]
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 points")
    stack = [0]
    push = stack.append
    pop = stack.pop
    for k in range(1, n):
        yk = values[k]
        while len(stack) >= 2:
            i0 = stack[-2]
            i1 = stack[-1]
            y0 = values[i0]
            t1 = (i1 - i0) * (yk - y0)
            t2 = (k - i0) * (values[i1] - y0)
            cross = t1 - t2
            tol = 1e-12 * max(abs(t1), abs(t2))
            if lower:
                if cross <= tol:
                    pop()
                else:
                    break
            else:
                if cross >= -tol:
                    pop()
                else:
                    break
        push(k)
    return np.array(stack, dtype=np.int64)
