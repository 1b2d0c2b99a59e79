"""Finite-grid reproducing-kernel computations for the integrated motion.

The kernel space of the integrated process on a grid is the Gaussian vector
with covariance Sigma_ij = E I(x_i) I(x_j) (closed form).  Norms are
computed through a spectrally truncated pseudo-inverse: the anchor row of
Sigma is exactly zero (I(0) = 0) and integrated-motion covariances are
severely ill-conditioned, so eigenvalues below a fixed ridge magnitude are
cut rather than inverted, and the flag ``regularized`` records that.

Localizer trends are built in the trapezoid-consistent geometry: eta is the
least-squares residual of the *discrete* integral I(1) projected onto the
motion values outside (0,1).  With that choice E eta w(x_j) vanishes at
machine precision for every outside grid point at every Hurst index, hence
phi1 = E eta I(x) is exactly 0 left of the origin and exactly constant
right of 1 — the properties the trend composition needs.  (Defining eta
from continuum covariances reproduces these identities exactly only in the
Markov case H = 1/2.)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .fbm import fbm_covariance, ifbm_covariance
from .grids import RandomnessSpec, SampleGrid, check_hurst, write_csv
from .persistence import McEstimate, RELIABILITY_FLOOR

__all__ = [
    "KernelSpace",
    "TrendFunction",
    "ShiftReport",
    "build_space",
    "rkhs_norm",
    "localizer_trends",
    "psi_trend",
    "combined_trend",
    "covariance_column_trend",
    "verify_shift_inequality",
    "TrendRangeError",
]

DENSE_SPACE_MAX_POINTS = 512
SHIFT_MC_MAX_POINTS = 64
RIDGE_FACTOR = 1e-12
NORM_RESIDUAL_TOL = 1e-6

_CHUNK = 50_000


class TrendRangeError(ValueError):
    """Trend lies outside the numerical range of the covariance."""


@dataclass(frozen=True)
class TrendFunction:
    """A deterministic trend sampled on the grid.

    ``norm_sq`` holds the constructed squared norm when the trend comes with
    one (localizers: E eta^2); the general path is ``rkhs_norm``.
    """

    values: np.ndarray
    label: str
    offset_a: float | None = None
    norm_sq: float | None = None

    def to_csv(self, path, grid: SampleGrid) -> None:
        write_csv(path, ("coordinate", "value"), zip(grid.coordinates,
                                                     self.values))


@dataclass(frozen=True)
class KernelSpace:
    """Dense covariance of the integrated motion on a grid, factorized."""

    grid: SampleGrid
    hurst: float
    cov: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    cutoff: float
    regularized: bool

    def solve(self, phi: np.ndarray) -> tuple[np.ndarray, float]:
        """Pseudo-solve Sigma z = phi; returns (z, relative residual)."""
        phi = np.asarray(phi, dtype=float)
        proj = self.eigvecs.T @ phi
        keep = self.eigvals > self.cutoff
        z = self.eigvecs @ np.where(keep, proj / np.where(keep, self.eigvals, 1.0),
                                    0.0)
        nrm = float(np.linalg.norm(phi))
        if nrm == 0.0:
            return z, 0.0
        residual = float(np.linalg.norm(self.cov @ z - phi)) / nrm
        return z, residual

    def sample_batch(self, seed: int, replicas: range) -> np.ndarray:
        """Exact Gaussian draws with this covariance, one row per replica,
        deterministic per (seed, replica)."""
        factor = self.eigvecs * np.sqrt(np.clip(self.eigvals, 0.0, None))
        n = self.grid.count
        z = np.empty((len(replicas), n))
        for i, rep in enumerate(replicas):
            z[i] = RandomnessSpec(seed, rep).generator().standard_normal(n)
        return z @ factor.T


def build_space(grid: SampleGrid, h: float) -> KernelSpace:
    """Kernel space of the integrated motion on an anchored grid."""
    h = check_hurst(h)
    if grid.count > DENSE_SPACE_MAX_POINTS:
        raise ValueError(f"dense kernel space capped at "
                         f"{DENSE_SPACE_MAX_POINTS} points (got {grid.count})")
    grid.anchor_index  # raises when the grid misses coordinate 0
    x = grid.coordinates
    cov = ifbm_covariance(h, x[:, None], x[None, :])
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    scale = float(np.trace(cov)) / grid.count
    if eigvals.min() < -1e-10 * scale:
        raise ValueError(f"integrated-motion covariance irreparably indefinite: "
                         f"smallest eigenvalue {eigvals.min():.3e}")
    cutoff = RIDGE_FACTOR * scale
    return KernelSpace(grid=grid, hurst=h, cov=cov, eigvals=eigvals,
                       eigvecs=eigvecs, cutoff=cutoff,
                       regularized=bool(eigvals.min() < cutoff))


def rkhs_norm(space: KernelSpace, trend: TrendFunction | np.ndarray) -> float:
    """sqrt(phi^T Sigma^+ phi); errors when phi is outside the numerical
    range of Sigma (relative residual above 1e-6)."""
    phi = trend.values if isinstance(trend, TrendFunction) else np.asarray(trend)
    if np.linalg.norm(phi) == 0.0:
        return 0.0
    z, residual = space.solve(phi)
    if residual > NORM_RESIDUAL_TOL:
        raise TrendRangeError(
            f"trend outside the numerical range of the covariance: relative "
            f"residual {residual:.3e} > {NORM_RESIDUAL_TOL:g}")
    return math.sqrt(max(float(phi @ z), 0.0))


# ---------------------------------------------------------------------------
# trends
# ---------------------------------------------------------------------------

def _trapezoid_matrix(grid: SampleGrid) -> np.ndarray:
    """T with I(x_i) = sum_j T[i, j] w(x_j) (signed trapezoid from 0)."""
    n = grid.count
    a = grid.anchor_index
    t = np.zeros((n, n))
    d = grid.spacing
    for i in range(n):
        if i > a:
            t[i, a] = 0.5 * d
            t[i, i] = 0.5 * d
            t[i, a + 1:i] = d
        elif i < a:
            t[i, a] = -0.5 * d
            t[i, i] = -0.5 * d
            t[i, i + 1:a] = -d
    return t


def _pseudo_solve_psd(mat: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    eigvals, eigvecs = np.linalg.eigh(0.5 * (mat + mat.T))
    cutoff = RIDGE_FACTOR * float(np.trace(mat)) / mat.shape[0]
    keep = eigvals > cutoff
    proj = eigvecs.T @ rhs
    sol = eigvecs @ np.where(keep, proj / np.where(keep, eigvals, 1.0), 0.0)
    return sol, bool(eigvals.min() < cutoff)


def localizer_trends(space: KernelSpace) -> tuple[TrendFunction, TrendFunction]:
    """Trends phi1 (vanishes left of 0, constant right of 1) and its mirror
    phi2, built from the unpredictable part of I(1) given the motion outside
    (0, 1).

    phi1(1) = E eta^2 = ||phi1||^2 holds by construction; ``norm_sq``
    carries E eta^2.
    """
    grid = space.grid
    x = grid.coordinates
    eps = 1e-12
    if grid.left > -2.0 + eps or grid.right < 2.0 - eps:
        raise ValueError("grid must cover [-L, L] with L >= 2")
    idx1 = grid.index_of(1.0)
    grid.index_of(-1.0)
    n_left = grid.anchor_index
    if grid.count - 1 - n_left != n_left:
        raise ValueError("grid must be symmetric around 0 so the mirrored "
                         "localizer lives on it")

    cw = fbm_covariance(space.hurst, x[:, None], x[None, :])
    tmat = _trapezoid_matrix(grid)
    outside = np.flatnonzero((x <= eps) | (x >= 1.0 - eps))
    b_full = tmat[idx1] @ cw                       # E I(1) w(x_j)
    a_mat = cw[np.ix_(outside, outside)]
    beta, _ = _pseudo_solve_psd(a_mat, b_full[outside])
    alpha = tmat[idx1].copy()
    alpha[outside] -= beta                         # eta = alpha . w
    eta_w = cw @ alpha                             # E eta w(x_j)
    phi1_vals = tmat @ eta_w                       # E eta I(x_i)
    eta_sq = float(tmat[idx1] @ eta_w)             # Var I(1) - beta . b
    phi1 = TrendFunction(values=phi1_vals, label="phi1", norm_sq=eta_sq)
    phi2 = TrendFunction(values=phi1_vals[::-1].copy(), label="phi2",
                         norm_sq=eta_sq)
    return phi1, phi2


def psi_trend(grid: SampleGrid) -> TrendFunction:
    """The quadratic-inside/linear-outside trend: 2x^2 on |x| < 1 and
    2|x| - 1 on |x| >= 1."""
    ax = np.abs(grid.coordinates)
    values = np.where(ax < 1.0, 2.0 * ax ** 2, 2.0 * ax - 1.0)
    return TrendFunction(values=values, label="psi")


def combined_trend(space: KernelSpace, a: int) -> TrendFunction:
    """psi plus (1+a) times the normalized localizers: equals 2|x| + a on
    grid points with |x| >= 1 (to rounding)."""
    if a not in (0, 1):
        raise ValueError("offset a must be 0 or 1")
    phi1, phi2 = localizer_trends(space)
    idx1 = space.grid.index_of(1.0)
    idxm1 = space.grid.index_of(-1.0)
    psi = psi_trend(space.grid)
    values = psi.values + (1.0 + a) * (phi1.values / phi1.values[idx1]
                                       + phi2.values / phi2.values[idxm1])
    return TrendFunction(values=values, label="combined", offset_a=float(a))


def covariance_column_trend(space: KernelSpace, coordinate: float,
                            factor: float = 1.0) -> TrendFunction:
    """A multiple of one covariance column; its norm is known in closed form
    as factor * sqrt(Sigma_ii)."""
    i = space.grid.index_of(coordinate)
    col = factor * space.cov[:, i]
    return TrendFunction(values=col, label=f"cov_col@{coordinate:g}x{factor:g}",
                         norm_sq=factor ** 2 * float(space.cov[i, i]))


# ---------------------------------------------------------------------------
# trend-shift inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftReport:
    """Monte-Carlo check that shifting the path by the trend moves
    sqrt(-log p) by at most norm/sqrt(2)."""

    p_trended: McEstimate
    p_plain: McEstimate
    norm: float
    lhs: float
    rhs: float
    slack_sigma: float
    passed: bool
    inconclusive: bool

    def to_json(self, path=None):
        doc = {"p_trended": self.p_trended.value, "p_plain": self.p_plain.value,
               "se_trended": self.p_trended.std_error,
               "se_plain": self.p_plain.std_error,
               "norm": self.norm, "lhs": self.lhs, "rhs": self.rhs,
               "pass": self.passed, "inconclusive": self.inconclusive}
        if path is None:
            return doc
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return doc


def verify_shift_inequality(space: KernelSpace, trend: TrendFunction,
                            level: float, replicas: int,
                            seed: int) -> ShiftReport:
    """Estimate stay-below probabilities with and without the trend on
    common draws and test the norm-controlled shift bound at 4 sigma."""
    if space.grid.count > SHIFT_MC_MAX_POINTS:
        raise ValueError(f"shift verification restricted to grids of at most "
                         f"{SHIFT_MC_MAX_POINTS} points (probabilities must "
                         "stay resolvable by plain MC)")
    norm = rkhs_norm(space, trend)
    phi = trend.values
    hits0 = 0
    hits1 = 0
    for lo in range(0, replicas, _CHUNK):
        reps = range(lo, min(lo + _CHUNK, replicas))
        draws = space.sample_batch(seed, reps)
        hits0 += int(np.count_nonzero(np.all(draws <= level, axis=1)))
        hits1 += int(np.count_nonzero(np.all(draws + phi[None, :] <= level,
                                             axis=1)))
    p0 = hits0 / replicas
    p1 = hits1 / replicas
    mk = lambda p, what: McEstimate(
        value=p, std_error=math.sqrt(p * (1 - p) / replicas),
        replicas=replicas, seed=seed, spacing=space.grid.spacing,
        label=what)
    est0, est1 = mk(p0, "plain"), mk(p1, f"trend:{trend.label}")
    floor = RELIABILITY_FLOOR / replicas
    if p0 < floor or p1 < floor:
        return ShiftReport(p_trended=est1, p_plain=est0, norm=norm,
                           lhs=math.nan, rhs=norm / math.sqrt(2.0),
                           slack_sigma=math.nan, passed=False,
                           inconclusive=True)
    root0 = math.sqrt(-math.log(p0))
    root1 = math.sqrt(-math.log(p1))
    lhs = abs(root1 - root0)
    rhs = norm / math.sqrt(2.0)
    se0 = est0.std_error / (2.0 * p0 * root0)
    se1 = est1.std_error / (2.0 * p1 * root1)
    se = math.hypot(se0, se1)
    slack_sigma = (rhs - lhs) / se if se > 0 else math.inf
    return ShiftReport(p_trended=est1, p_plain=est0, norm=norm, lhs=lhs,
                       rhs=rhs, slack_sigma=slack_sigma,
                       passed=bool(lhs <= rhs + 4.0 * se), inconclusive=False)
