"""Uniform sample grids, grid-sampled paths and reproducible randomness.

Everything downstream (samplers, Burgers solver, Monte Carlo engines) works
on uniform grids that contain the coordinate 0 exactly, so that two-sided
processes can be anchored there.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

PATH_KINDS = ("fbm", "integrated", "potential", "velocity")

# Kinds whose value at the anchor must be exactly zero.
_ANCHORED_KINDS = ("fbm", "integrated")


def check_hurst(h: float) -> float:
    """Validate a Hurst index; boundary values 0 and 1 are rejected."""
    h = float(h)
    if not 0.0 < h < 1.0:
        raise ValueError(f"Hurst index must lie strictly in (0, 1), got {h}")
    return h


@dataclass(frozen=True)
class SampleGrid:
    """Uniform grid: coordinate of index i is ``left + i * spacing``."""

    left: float
    spacing: float
    count: int

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError(f"grid spacing must be > 0, got {self.spacing}")
        if self.count < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.count}")

    @classmethod
    def anchored(cls, spacing: float, n_left: int, n_right: int) -> "SampleGrid":
        """Grid spanning ``[-n_left*spacing, n_right*spacing]`` whose anchor
        coordinate is exactly 0 (index ``n_left``)."""
        if n_left < 0 or n_right < 0 or n_left + n_right < 1:
            raise ValueError("anchored grid needs n_left, n_right >= 0 spanning "
                             "at least one step")
        return cls(left=-(n_left * float(spacing)), spacing=float(spacing),
                   count=n_left + n_right + 1)

    @classmethod
    def one_sided(cls, spacing: float, n: int) -> "SampleGrid":
        """Grid on [0, n*spacing] anchored at 0."""
        return cls.anchored(spacing, 0, n)

    @property
    def coordinates(self) -> np.ndarray:
        # (i - anchor)*spacing would also work; left is always -k*spacing for
        # anchored grids so the anchor coordinate comes out exactly 0 either way
        return self.left + self.spacing * np.arange(self.count)

    @property
    def right(self) -> float:
        return self.left + self.spacing * (self.count - 1)

    @property
    def anchor_index(self) -> int:
        """Index whose coordinate is exactly 0; raises if the grid has none."""
        i = int(round(-self.left / self.spacing))
        if i < 0 or i >= self.count or self.left + i * self.spacing != 0.0:
            raise ValueError("grid is not anchored: no index has coordinate 0")
        return i

    @property
    def is_anchored(self) -> bool:
        try:
            self.anchor_index
        except ValueError:
            return False
        return True

    def index_of(self, coordinate: float) -> int:
        """Index of the grid point matching ``coordinate`` to 1e-9*spacing."""
        i = int(round((coordinate - self.left) / self.spacing))
        if i < 0 or i >= self.count or \
                abs(self.left + i * self.spacing - coordinate) > 1e-9 * self.spacing:
            raise ValueError(f"coordinate {coordinate} is not on the grid")
        return i


@dataclass(frozen=True)
class GridPath:
    """A process sample on a uniform grid.

    ``kind`` is one of 'fbm', 'integrated', 'potential', 'velocity'.  For the
    first two the value at the anchor index is exactly 0.
    """

    grid: SampleGrid
    values: np.ndarray
    kind: str
    hurst: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.kind not in PATH_KINDS:
            raise ValueError(f"unknown path kind {self.kind!r}")
        if values.shape != (self.grid.count,):
            raise ValueError(f"values shape {values.shape} does not match grid "
                             f"count {self.grid.count}")
        if not np.all(np.isfinite(values)):
            raise ValueError("path contains non-finite values")
        if self.kind in _ANCHORED_KINDS and values[self.grid.anchor_index] != 0.0:
            raise ValueError(f"{self.kind} path must be exactly 0 at the anchor")

    @property
    def coordinates(self) -> np.ndarray:
        return self.grid.coordinates

    def value_at(self, coordinate: float) -> float:
        return float(self.values[self.grid.index_of(coordinate)])

    def to_csv(self, path) -> None:
        write_csv(path, ("coordinate", "value"),
                  zip(self.coordinates, self.values))


@dataclass(frozen=True)
class RandomnessSpec:
    """Counter-style randomness contract: (seed, replica) fully determines
    every draw, so replicas can be generated in any order or in parallel."""

    seed: int
    replica: int = 0

    def __post_init__(self):
        if self.replica < 0:
            raise ValueError("replica must be non-negative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng((int(self.seed), int(self.replica)))

    def with_replica(self, replica: int) -> "RandomnessSpec":
        return RandomnessSpec(self.seed, replica)


def write_csv(path, header, rows) -> None:
    """CSV writer using shortest round-trip float formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")


def _format_cell(c) -> str:
    if isinstance(c, (float, np.floating)):
        return repr(float(c))
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    return "" if c is None else str(c)


def read_path_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a two-column coordinate,value CSV written by GridPath.to_csv."""
    coords, values = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["coordinate", "value"]:
            raise ValueError(f"unexpected CSV header {header}")
        for line in fh:
            a, b = line.strip().split(",")
            coords.append(float(a))
            values.append(float(b))
    return np.array(coords), np.array(values)
