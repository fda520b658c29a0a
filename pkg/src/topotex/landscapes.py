"""Persistence landscapes, their fixed-grid embeddings, and the inverse
view used for virtual-point display.

Every finite bar raises a tent of slope +-1 over its internal-parameter
interval; the k-th landscape function is the pointwise k-th largest tent
value. Bar endpoints are integer intensities, so every vertex of every
envelope (tent corners and tent crossings) lies on the half-integer
lattice in [0, 255]. The construction therefore evaluates the envelopes
exactly on that lattice and compresses runs of equal slope into genuine
piecewise-linear functions; no approximation is involved anywhere.

Each linear piece remembers which tent side it follows (slope and the
bar endpoint it anchors to), so evaluating at an arbitrary float t costs
one subtraction and reproduces bit for bit what a direct tent computation
at t would give.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cubical import Barcode

_HALF_LATTICE = np.arange(0.0, 255.5, 0.5)


@dataclass(frozen=True)
class LandscapeGrid:
    """Fixed sampling grid shared by every embedding in a run."""

    t_min: float = 0.0
    t_max: float = 255.0
    n: int = 200

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid needs at least 2 samples")
        if not self.t_min < self.t_max:
            raise ValueError("grid needs t_min < t_max")

    def points(self) -> np.ndarray:
        return self.t_min + (self.t_max - self.t_min) * np.arange(self.n) / (self.n - 1)

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n - 1)

    def to_json_dict(self) -> dict:
        return {"min": self.t_min, "max": self.t_max, "n": self.n}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "LandscapeGrid":
        return cls(float(obj["min"]), float(obj["max"]), int(obj["n"]))


DEFAULT_GRID = LandscapeGrid()


class PiecewiseLinear:
    """A 1-Lipschitz piecewise-linear function with slopes in {-1, 0, +1}.

    xs are breakpoints covering [0, 255]; piece i spans [xs[i], xs[i+1])
    with the given slope and anchor (the tent endpoint the piece runs
    along). Zero outside [0, 255].
    """

    __slots__ = ("xs", "ys", "slopes", "anchors")

    def __init__(self, xs: np.ndarray, ys: np.ndarray, slopes: np.ndarray,
                 anchors: np.ndarray):
        self.xs = xs
        self.ys = ys
        self.slopes = slopes
        self.anchors = anchors

    @classmethod
    def zero(cls) -> "PiecewiseLinear":
        return cls(np.array([0.0, 255.0]), np.zeros(2),
                   np.zeros(1, dtype=np.int8), np.zeros(1))

    @classmethod
    def from_lattice_values(cls, values: np.ndarray) -> "PiecewiseLinear":
        """Compress exact values on the half-integer lattice into pieces."""
        diffs = np.rint((values[1:] - values[:-1]) * 2.0).astype(np.int8)
        keep = np.empty(_HALF_LATTICE.size, dtype=bool)
        keep[0] = True
        keep[-1] = True
        keep[1:-1] = diffs[1:] != diffs[:-1]
        xs = _HALF_LATTICE[keep]
        ys = values[keep]
        slopes = diffs[keep[:-1]]
        # ascending piece follows t - b with b = x0 - y0; descending follows
        # d - t with d = x0 + y0; flat pieces sit at zero
        anchors = np.where(slopes == 1, xs[:-1] - ys[:-1],
                           np.where(slopes == -1, xs[:-1] + ys[:-1], 0.0))
        return cls(xs, ys, slopes, anchors)

    def __call__(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        piece = np.clip(np.searchsorted(self.xs, ts, side="right") - 1,
                        0, self.slopes.size - 1)
        s = self.slopes[piece]
        a = self.anchors[piece]
        out = np.where(s == 1, ts - a, np.where(s == -1, a - ts, 0.0))
        return np.where((ts < 0.0) | (ts > 255.0), 0.0, out)

    @property
    def max_value(self) -> float:
        return float(self.ys.max())


@dataclass(frozen=True)
class PersistenceLandscape:
    dim: int
    functions: tuple[PiecewiseLinear, ...]

    @property
    def k(self) -> int:
        return len(self.functions)


def _bars_to_t_intervals(bc: Barcode, dim: int) -> tuple[np.ndarray, np.ndarray]:
    births, deaths = [], []
    for bar in bc.bars_of_dim(dim):
        if bar.infinite:
            continue
        births.append(255 - bar.birth_intensity)
        deaths.append(255 - bar.death_intensity)
    return np.asarray(births, dtype=float), np.asarray(deaths, dtype=float)


def compute_landscape(bc: Barcode, dim: int, k: int = 5) -> PersistenceLandscape:
    """Top k landscape functions of one homological dimension.

    Infinite bars carry no tent and are dropped before the envelope is
    taken; an empty (or all-infinite) barcode yields k zero functions.
    """
    b, d = _bars_to_t_intervals(bc, dim)
    if b.size == 0:
        return PersistenceLandscape(dim, tuple(PiecewiseLinear.zero() for _ in range(k)))
    tents = np.maximum(0.0, np.minimum(_HALF_LATTICE[None, :] - b[:, None],
                                       d[:, None] - _HALF_LATTICE[None, :]))
    kk = min(k, b.size)
    if kk < b.size:
        top = np.partition(tents, b.size - kk, axis=0)[b.size - kk:]
    else:
        top = tents
    top = np.sort(top, axis=0)[::-1]
    funcs = [PiecewiseLinear.from_lattice_values(top[i]) for i in range(kk)]
    funcs += [PiecewiseLinear.zero() for _ in range(k - kk)]
    return PersistenceLandscape(dim, tuple(funcs))


def sample_landscape(ls: PersistenceLandscape, n: int = 200,
                     grid: LandscapeGrid | None = None) -> np.ndarray:
    """Evaluate all k functions on the grid; returns a flat k*n vector
    ordered (lambda_1 samples, ..., lambda_k samples)."""
    if grid is None:
        grid = LandscapeGrid(n=n)
    ts = grid.points()
    return np.concatenate([f(ts) for f in ls.functions])


@dataclass(frozen=True, eq=False)
class LandscapeEmbedding:
    """Concatenated grid samples: H0 lambda_1..k blocks then H1 blocks."""

    values: np.ndarray
    grid: LandscapeGrid = DEFAULT_GRID
    k: int = 5

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or v.size != 2 * self.k * self.grid.n:
            raise ValueError(
                f"embedding must have length {2 * self.k * self.grid.n}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise ValueError("embedding components must be finite and non-negative")
        blocks = v.reshape(2 * self.k, self.grid.n)
        # 1-Lipschitz functions cannot move more than the grid spacing per
        # step; 1e-9 absorbs float rounding of the samples themselves
        if np.any(np.abs(np.diff(blocks, axis=1)) > self.grid.spacing + 1e-9):
            raise ValueError("embedding violates the per-block Lipschitz bound")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dimension(self) -> int:
        return self.values.size


def embed(bc: Barcode, k: int = 5, grid: LandscapeGrid | None = None) -> LandscapeEmbedding:
    if grid is None:
        grid = DEFAULT_GRID
    parts = [sample_landscape(compute_landscape(bc, dim, k), grid=grid, n=grid.n)
             for dim in (0, 1)]
    return LandscapeEmbedding(np.concatenate(parts), grid=grid, k=k)


def average_embeddings(embeddings: list[LandscapeEmbedding]) -> LandscapeEmbedding:
    if not embeddings:
        raise ValueError("cannot average an empty list of embeddings")
    first = embeddings[0]
    for e in embeddings[1:]:
        if e.grid != first.grid or e.k != first.k:
            raise ValueError("embeddings must share one grid and k to be averaged")
    stacked = np.stack([e.values for e in embeddings])
    mean = stacked.mean(axis=0)
    # two-pass correction: recovers the last ulp the sum/divide loses, and
    # makes the mean of identical inputs reproduce them exactly
    mean = mean + (stacked - mean).sum(axis=0) / len(embeddings)
    return LandscapeEmbedding(mean, grid=first.grid, k=first.k)


@dataclass(frozen=True, eq=False)
class LandscapeCurves:
    """Landscape-shaped curves sampled on a grid, for display and JSON.

    ``virtual`` marks curves reconstructed from an arbitrary embedding-space
    point; such curves may violate the ordering and Lipschitz axioms and are
    rendered as-is rather than repaired.
    """

    h0: np.ndarray
    h1: np.ndarray
    grid: LandscapeGrid
    virtual: bool

    @classmethod
    def from_embedding(cls, emb: LandscapeEmbedding) -> "LandscapeCurves":
        h0, h1 = emb.values.reshape(2, emb.k, emb.grid.n)
        return cls(h0.copy(), h1.copy(), emb.grid, virtual=False)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.h0.ravel(), self.h1.ravel()])

    def to_json_dict(self) -> dict:
        return {
            "grid": self.grid.to_json_dict(),
            "h0": [row.tolist() for row in self.h0],
            "h1": [row.tolist() for row in self.h1],
            "virtual": self.virtual,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True) + "\n")


def vector_to_landscape(values: np.ndarray, k: int = 5,
                        grid: LandscapeGrid | None = None) -> LandscapeCurves:
    """Reshape an embedding-space vector into its ten curves, unvalidated.

    The result is flagged virtual: points off the data manifold need not
    satisfy any landscape axiom, and no repair is attempted.
    """
    if grid is None:
        grid = DEFAULT_GRID
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size != 2 * k * grid.n:
        raise ValueError(f"expected a vector of length {2 * k * grid.n}, got {v.shape}")
    h0, h1 = v.reshape(2, k, grid.n)
    return LandscapeCurves(h0.copy(), h1.copy(), grid, virtual=True)
