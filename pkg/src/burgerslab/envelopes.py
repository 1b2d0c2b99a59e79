"""Convex minorants/majorants of discrete sequences and one-sided slopes.

For a sequence I(0..N) the left/right extremal difference quotients at k are

    left(k)  = min over p in 1..k   of (I(k) - I(k-p)) / p
    right(k) = max over p in 1..N-k of (I(k+p) - I(k)) / p

k is a nodal point of the concave majorant exactly when left(k) >= right(k);
summing the positive parts of left - right over interior k telescopes to
right(0) - left(N).

Node extraction runs on a compiled monotone-chain kernel when the extension
module built from ``_envelope_core.pyx`` is available; a pure-Python backend
with identical arithmetic is selected otherwise (or when the environment
variable BURGERSLAB_PURE_PYTHON is set).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

if os.environ.get("BURGERSLAB_PURE_PYTHON"):
    from . import _envelope_py as _core
    _BACKEND = "python"
else:
    try:
        from . import _envelope_core as _core  # type: ignore[attr-defined]
        _BACKEND = "compiled"
    except ImportError:
        from . import _envelope_py as _core
        _BACKEND = "python"


def envelope_backend() -> str:
    """Which hull kernel is active: 'compiled' or 'python'."""
    return _BACKEND


@dataclass(frozen=True)
class ConvexEnvelope:
    """Piecewise-linear envelope touching the sequence at its nodes."""

    side: str                   # "minorant" or "majorant"
    count: int                  # length of the underlying sequence
    node_indices: np.ndarray    # strictly increasing, starts 0, ends count-1
    node_values: np.ndarray
    segment_slopes: np.ndarray  # per unit index step, one per segment

    def evaluate(self, indices=None) -> np.ndarray:
        """Envelope value at the given indices (default: the whole grid)."""
        if indices is None:
            indices = np.arange(self.count)
        return np.interp(indices, self.node_indices, self.node_values)

    def to_csv(self, path) -> None:
        from .grids import write_csv
        slopes = list(self.segment_slopes) + [None]
        write_csv(path, ("node_index", "node_value", "slope_after"),
                  zip(self.node_indices, self.node_values, slopes))


def _build(values: np.ndarray, lower: bool) -> ConvexEnvelope:
    values = np.ascontiguousarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need a 1-d sequence of length >= 2")
    if not np.all(np.isfinite(values)):
        raise ValueError("sequence contains non-finite values")
    nodes = np.asarray(_core.hull_nodes(values, lower))
    node_values = values[nodes]
    slopes = np.diff(node_values) / np.diff(nodes)
    return ConvexEnvelope(side="minorant" if lower else "majorant",
                          count=values.size, node_indices=nodes,
                          node_values=node_values, segment_slopes=slopes)

def lower_envelope(values) -> ConvexEnvelope:
    """Greatest convex minorant; collinear interior points are not nodes."""
    return _build(np.asarray(values), lower=True)

def upper_envelope(values) -> ConvexEnvelope:
    """Least concave majorant; collinear interior points are not nodes."""
    return _build(np.asarray(values), lower=False)


# ---------------------------------------------------------------------------
# one-sided slopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopePair:
    """Extremal one-sided difference quotients at an index.

    ``arg_left``/``arg_right`` report the smallest attaining p (diagnostics
    only; the values are unambiguous under ties).
    """

    index: int
    left: float
    right: float
    arg_left: int
    arg_right: int


def left_slope(values, k: int) -> tuple[float, int]:
    """min over p in 1..k of (values[k] - values[k-p]) / p, with smallest
    attaining p."""
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    if not 1 <= k <= n:
        raise IndexError(f"left slope needs 1 <= k <= {n}, got {k}")
    p = np.arange(1, k + 1)
    q = (values[k] - values[k - p]) / p
    i = int(np.argmin(q))
    return float(q[i]), int(p[i])

def right_slope(values, k: int) -> tuple[float, int]:
    """max over p in 1..N-k of (values[k+p] - values[k]) / p, with smallest
    attaining p."""
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    if not 0 <= k <= n - 1:
        raise IndexError(f"right slope needs 0 <= k <= {n - 1}, got {k}")
    p = np.arange(1, n - k + 1)
    q = (values[k + p] - values[k]) / p
    i = int(np.argmax(q))
    return float(q[i]), int(p[i])

def slope_pair(values, k: int) -> SlopePair:
    """Both one-sided slopes at an interior index (1 <= k <= N-1)."""
    left, pl = left_slope(values, k)
    right, pr = right_slope(values, k)
    return SlopePair(index=k, left=left, right=right, arg_left=pl, arg_right=pr)

def windowed_slope_pair(values, k: int, window: int) -> SlopePair:
    """Slopes with the widened range p in 1..window on both sides; the
    sequence must extend over k-window .. k+window."""
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if k - window < 0 or k + window > values.size - 1:
        raise IndexError(f"sequence does not cover k={k} +- window={window}")
    p = np.arange(1, window + 1)
    ql = (values[k] - values[k - p]) / p
    qr = (values[k + p] - values[k]) / p
    il = int(np.argmin(ql))
    ir = int(np.argmax(qr))
    return SlopePair(index=k, left=float(ql[il]), right=float(qr[ir]),
                     arg_left=int(p[il]), arg_right=int(p[ir]))


def all_slope_pairs(values) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized left/right slopes at every index of one sequence.

    Returns (gm, gp) with gm[k] defined for k >= 1 (nan at 0) and gp[k]
    defined for k <= N-1 (nan at N).
    """
    gm, gp = all_slope_pairs_batch(np.asarray(values, dtype=float)[None, :])
    return gm[0], gp[0]

def all_slope_pairs_batch(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left/right slopes at every index for a batch of sequences (R, N+1).

    O(N^2) memory per row; callers chunk the replica axis.
    """
    rows = np.asarray(rows, dtype=float)
    r, n = rows.shape
    idx = np.arange(n)
    steps = (idx[None, :] - idx[:, None]).astype(float)  # j - i
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = (rows[:, None, :] - rows[:, :, None]) / steps  # [r, i, j]
    upper = steps > 0
    gm = np.where(upper[None, :, :], quot, np.inf).min(axis=1)   # min over i<k
    gp = np.where(upper[None, :, :], quot, -np.inf).max(axis=2)  # max over j>k
    gm[:, 0] = np.nan
    gp[:, -1] = np.nan
    return gm, gp


def functional_F(values) -> float:
    """Sum over interior k of the positive part of left(k) - right(k)."""
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise ValueError("need length >= 3")
    gm, gp = all_slope_pairs(values)
    return math.fsum(np.clip(gm[1:-1] - gp[1:-1], 0.0, None))

def functional_F_endpoint(values) -> float:
    """Telescoped form right(0) - left(N) of the same functional."""
    return right_slope(values, 0)[0] - left_slope(values, len(values) - 1)[0]


def nodal_event(values, k: int) -> bool:
    """Whether k is a nodal point: left(k) >= right(k) together with the two
    one-sided barrier conditions (which hold by construction of the extremal
    slopes; they are checked explicitly all the same)."""
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    if not 1 <= k <= n - 1:
        raise IndexError(f"nodal_event needs interior k, got {k}")
    pair = slope_pair(values, k)
    p_left = np.arange(1, k + 1)
    p_right = np.arange(1, n - k + 1)
    # the barrier conditions compared in quotient form, which reproduces the
    # slope computation exactly and so cannot be broken by rounding
    below_left = np.all((values[k] - values[k - p_left]) / p_left >= pair.left)
    below_right = np.all((values[k + p_right] - values[k]) / p_right <= pair.right)
    return bool(pair.left >= pair.right) and bool(below_left) and bool(below_right)
