"""Fractional Brownian motion on uniform grids and its running integral.

Two samplers are provided:

* ``sample_fbm_exact`` — dense symmetric factorization of the covariance
  matrix; O(n^3) setup, usable up to a few thousand points; serves as the
  distributional oracle.
* ``sample_fbm_fast`` — circulant embedding of the stationary increment
  sequence (O(n log n)), cumulatively summed and re-anchored so the value at
  coordinate 0 is exactly zero.  The two half-axes are generated from one
  increment sequence and are therefore dependent, as they must be for any
  Hurst index other than 1/2.

Closed-form covariances of the motion, of its increments, of its running
integral and the motion/integral cross-covariance are exposed as oracles for
tests and for the kernel-space module.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grids import GridPath, RandomnessSpec, SampleGrid, check_hurst

__all__ = [
    "fbm_covariance",
    "fgn_autocovariance",
    "ifbm_covariance",
    "fbm_ifbm_cross_covariance",
    "sample_fbm_exact",
    "sample_fbm_fast",
    "sample_fbm_fast_batch",
    "integrate_path",
    "integrate_values",
    "FactorizationError",
    "EmbeddingError",
]

EXACT_SAMPLER_MAX_POINTS = 4096

# Negative circulant eigenvalues are tolerated up to this fraction of the
# largest one; beyond it the embedding is doubled, at most 4 times.
EMBEDDING_EIG_TOL = 1e-9
EMBEDDING_MAX_DOUBLINGS = 4


class FactorizationError(RuntimeError):
    """Dense covariance factorization failed (matrix numerically indefinite)."""


class EmbeddingError(RuntimeError):
    """Circulant embedding stayed indefinite after the doubling cap."""


def fbm_covariance(h: float, x, y):
    """E w(x) w(y) = 0.5 (|x|^2H + |y|^2H - |x-y|^2H), valid on all of R."""
    h2 = 2.0 * check_hurst(h)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = 0.5 * (np.abs(x) ** h2 + np.abs(y) ** h2 - np.abs(x - y) ** h2)
    return out if out.ndim else float(out)

def fgn_autocovariance(h: float, lag, spacing: float = 1.0):
    """Covariance of consecutive-grid increments of w at integer lag.

    Equals spacing^2H * 0.5 (|k+1|^2H - 2|k|^2H + |k-1|^2H) with k = |lag|,
    the second difference of the motion covariance.
    """
    h2 = 2.0 * check_hurst(h)
    if spacing <= 0:
        raise ValueError(f"spacing must be > 0, got {spacing}")
    k = np.abs(np.asarray(lag, dtype=float))
    out = spacing ** h2 * 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2
                                 + np.abs(k - 1.0) ** h2)
    return out if out.ndim else float(out)

def ifbm_covariance(h: float, s, t):
    """E I(s) I(t) for the running integral I(x) of w, anchored at I(0)=0.

    Closed form obtained by integrating the motion covariance over
    [0,s] x [0,t] (signed integrals); valid for all real s, t:

        0.5 [ s t (|s|^2H + |t|^2H) / (2H+1)
              - (|s|^b + |t|^b - |s-t|^b) / ((2H+1)(2H+2)) ],  b = 2H+2.
    """
    b = 2.0 * check_hurst(h)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    term1 = s * t * (np.abs(s) ** b + np.abs(t) ** b) / (b + 1.0)
    term2 = (np.abs(s) ** (b + 2.0) + np.abs(t) ** (b + 2.0)
             - np.abs(s - t) ** (b + 2.0)) / ((b + 1.0) * (b + 2.0))
    out = 0.5 * (term1 - term2)
    return out if out.ndim else float(out)

def fbm_ifbm_cross_covariance(h: float, x, t):
    """E w(x) I(t): single signed integral of the motion covariance.

        0.5 [ |x|^2H t + (sgn(t)|t|^a - sgn(x)|x|^a + sgn(x-t)|x-t|^a) / a ],
        a = 2H+1.
    """
    b = 2.0 * check_hurst(h)
    a = b + 1.0
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (np.abs(x) ** b * t
                 + (np.sign(t) * np.abs(t) ** a
                    - np.sign(x) * np.abs(x) ** a
                    + np.sign(x - t) * np.abs(x - t) ** a) / a)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# exact sampler
# ---------------------------------------------------------------------------

def sample_fbm_exact(h: float, grid: SampleGrid, rand: RandomnessSpec) -> GridPath:
    """Draw w on the grid from the exact joint Gaussian law.

    The covariance matrix of the non-anchor coordinates is factorized with a
    dense Cholesky decomposition; the anchor value is exactly zero.
    """
    h = check_hurst(h)
    if grid.count > EXACT_SAMPLER_MAX_POINTS:
        raise ValueError(f"exact sampler is capped at {EXACT_SAMPLER_MAX_POINTS} "
                         f"points (got {grid.count}); use sample_fbm_fast")
    anchor = grid.anchor_index
    coords = np.delete(grid.coordinates, anchor)
    cov = fbm_covariance(h, coords[:, None], coords[None, :])
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        smallest = float(np.linalg.eigvalsh(cov).min())
        raise FactorizationError(
            f"fBm covariance matrix is not positive definite at H={h}: "
            f"smallest pivot/eigenvalue {smallest:.6e}") from None
    z = rand.generator().standard_normal(grid.count - 1)
    values = np.insert(chol @ z, anchor, 0.0)
    return GridPath(grid, values, "fbm", hurst=h)


# ---------------------------------------------------------------------------
# circulant-embedding sampler
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _embedding_amplitudes(h: float, spacing: float, n_increments: int):
    """Spectral amplitudes sqrt(eig / 2M) of the circulant embedding of the
    increment autocovariance, with automatic doubling of the half-size M."""
    m0 = 1
    while m0 < n_increments:
        m0 *= 2
    m = m0
    for _ in range(EMBEDDING_MAX_DOUBLINGS + 1):
        r = fgn_autocovariance(h, np.arange(m + 1), spacing)
        first_row = np.concatenate([r, r[m - 1:0:-1]])
        eig = np.fft.fft(first_row).real
        if eig.min() >= -EMBEDDING_EIG_TOL * eig.max():
            return m, np.sqrt(np.clip(eig, 0.0, None) / (2.0 * m))
        m *= 2
    raise EmbeddingError(
        f"circulant embedding for H={h} stayed indefinite after "
        f"{EMBEDDING_MAX_DOUBLINGS} doublings (half-size {m}); the increment "
        "covariance cannot be embedded at this size — double the embedding "
        "size cap or reduce the grid")


def _fgn_rows(h: float, spacing: float, n_increments: int,
              noise: np.ndarray) -> np.ndarray:
    """Map standard-normal rows of length 2M to increment rows of length n."""
    m, amp = _embedding_amplitudes(h, spacing, n_increments)
    v = np.empty(noise.shape[:-1] + (2 * m,), dtype=complex)
    v[..., 0] = noise[..., 0]
    v[..., m] = noise[..., 1]
    half = (noise[..., 2:m + 1] + 1j * noise[..., m + 1:2 * m]) / np.sqrt(2.0)
    v[..., 1:m] = half
    v[..., m + 1:] = np.conj(half[..., ::-1])
    return np.fft.fft(amp * v, axis=-1).real[..., :n_increments]


def _noise_length(h: float, spacing: float, n_increments: int) -> int:
    m, _ = _embedding_amplitudes(h, spacing, n_increments)
    return 2 * m

def sample_fbm_fast(h: float, grid: SampleGrid, rand: RandomnessSpec) -> GridPath:
    """Draw w on a (possibly large) anchored grid in O(n log n).

    Same law as ``sample_fbm_exact`` — a single stationary increment sequence
    spans the whole interval and the cumulative sum is re-anchored at
    coordinate 0 — but the draws differ path-by-path even for equal seeds.
    """
    h = check_hurst(h)
    anchor = grid.anchor_index
    n_inc = grid.count - 1
    noise = rand.generator().standard_normal(_noise_length(h, grid.spacing, n_inc))
    fgn = _fgn_rows(h, grid.spacing, n_inc, noise)
    levels = np.concatenate([[0.0], np.cumsum(fgn)])
    values = levels - levels[anchor]
    values[anchor] = 0.0
    return GridPath(grid, values, "fbm", hurst=h)


def sample_fbm_fast_batch(h: float, grid: SampleGrid, seed: int,
                          replicas: range) -> np.ndarray:
    """Rows of fast-sampler paths, one per replica index.

    Row i equals ``sample_fbm_fast(h, grid, RandomnessSpec(seed, replicas[i]))``
    bit for bit: each row's noise comes from that replica's own generator, so
    batching and chunking cannot change results.
    """
    h = check_hurst(h)
    anchor = grid.anchor_index
    n_inc = grid.count - 1
    ln = _noise_length(h, grid.spacing, n_inc)
    noise = np.empty((len(replicas), ln))
    for i, rep in enumerate(replicas):
        noise[i] = RandomnessSpec(seed, rep).generator().standard_normal(ln)
    fgn = _fgn_rows(h, grid.spacing, n_inc, noise)
    levels = np.concatenate([np.zeros((len(replicas), 1)), np.cumsum(fgn, axis=1)],
                            axis=1)
    values = levels - levels[:, anchor:anchor + 1]
    values[:, anchor] = 0.0
    return values


# ---------------------------------------------------------------------------
# running integral
# ---------------------------------------------------------------------------

def integrate_values(values: np.ndarray, spacing: float, anchor: int) -> np.ndarray:
    """Trapezoidal cumulative integral along the last axis, re-anchored so the
    value at ``anchor`` is exactly zero (signed: negative coordinates carry
    minus the integral back to 0)."""
    inc = 0.5 * (values[..., :-1] + values[..., 1:]) * spacing
    levels = np.zeros(values.shape)
    np.cumsum(inc, axis=-1, out=levels[..., 1:])
    levels -= levels[..., anchor:anchor + 1]
    levels[..., anchor] = 0.0
    return levels

def integrate_path(path: GridPath) -> GridPath:
    """Running integral I(x) of an fbm-kind path, I(0) = 0 exactly."""
    if path.kind != "fbm":
        raise ValueError(f"integrate_path expects an fbm path, got {path.kind!r}")
    levels = integrate_values(path.values, path.grid.spacing,
                              path.grid.anchor_index)
    return GridPath(path.grid, levels, "integrated", hurst=path.hurst)
