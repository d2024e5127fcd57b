from __future__ import annotations
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from core.errors import EmptyInput, InvalidSpec, NoHoles
from core.grid import Grid2D
from fractals.cantor_sets import IntervalSet, largest_gap

HIST_BINS = 256
KL_EPSILON = 1e-9
FOUR_NEIGHBOURS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True, eq=False)
class Histogram256:
    bins: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=float).ravel()
        if arr.shape != (HIST_BINS,):
            raise InvalidSpec(f"histogram needs {HIST_BINS} bins, got {arr.size}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise InvalidSpec("histogram counts must be finite and non-negative")
        if arr.sum() <= 0:
            raise EmptyInput("histogram total must be positive")
        object.__setattr__(self, "bins", arr)

    @property
    def total(self) -> float:
        return float(self.bins.sum())


# --- 1D gap lacunarity ---

def gap_lacunarity_1d(s: IntervalSet) -> Fraction:
    return largest_gap(s)


def _check_archetype(N: int, r: Fraction) -> Fraction:
    r = Fraction(r)
    if N < 2 or r <= 0 or N * r >= 1:
        raise InvalidSpec(f"need N >= 2, r > 0 and N r < 1, got N={N}, r={r}")
    return r


def clustered_set(N: int, r) -> IntervalSet:
    """N pieces of length r packed against both ends, leaving one gap of 1 - N r."""
    r = _check_archetype(N, r)
    left = (N + 1) // 2
    return IntervalSet.from_pairs([(0, left * r), (1 - (N - left) * r, 1)])


def spread_set(N: int, r) -> IntervalSet:
    """N pieces of length r separated by N - 1 equal gaps of (1 - N r) / (N - 1)."""
    r = _check_archetype(N, r)
    gap = (1 - N * r) / (N - 1)
    return IntervalSet.from_pairs([(k * (r + gap), k * (r + gap) + r) for k in range(N)])


# --- 2D hole lacunarity ---

def _holes(cells: np.ndarray) -> tuple[np.ndarray, int]:
    rows, cols = np.nonzero(cells)
    if len(rows) == 0:
        raise NoHoles("grid has no occupied cells")
    box = cells[rows.min():rows.max() + 1, cols.min():cols.max() + 1]
    labels, count = ndimage.label(~box, structure=FOUR_NEIGHBOURS)
    border = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    for lab in border:
        if lab:
            labels[labels == lab] = 0
    return labels, count


def hole_perimeter(hole: np.ndarray) -> int:
    """Unit edges between hole cells and their non-hole 4-neighbours."""
    padded = np.pad(hole, 1)
    inner = padded[1:-1, 1:-1]
    edges = 0
    for shifted in (padded[:-2, 1:-1], padded[2:, 1:-1], padded[1:-1, :-2], padded[1:-1, 2:]):
        edges += int(np.count_nonzero(inner & ~shifted))
    return edges


def hole_lacunarity_2d(grid: Grid2D) -> float:
    """sqrt(area) / perimeter of the largest enclosed 4-connected empty region."""
    labels, count = _holes(grid.cells)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    areas[0] = 0
    if areas.max() == 0:
        raise NoHoles("no empty region is enclosed by the occupied bounding box")
    biggest = int(np.argmax(areas))
    return math.sqrt(areas[biggest]) / hole_perimeter(labels == biggest)


# --- gliding-box mass statistics ---

def gliding_box_masses(grid: Grid2D, L: int) -> np.ndarray:
    """Occupied-cell count of every L x L window, via a summed-area table."""
    side = grid.side
    if not 1 <= L < side:
        raise InvalidSpec(f"box size must satisfy 1 <= L < {side}, got {L}")
    sat = np.zeros((side + 1, side + 1), dtype=np.int64)
    sat[1:, 1:] = grid.cells.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    return (sat[L:, L:] - sat[:-L, L:] - sat[L:, :-L] + sat[:-L, :-L]).ravel()


def gliding_box_lacunarity(grid: Grid2D, L: int) -> float:
    """E[m^2] / E[m]^2 over all windows."""
    m = gliding_box_masses(grid, L).astype(float)
    mean = m.mean()
    if mean <= 0:
        raise EmptyInput("gliding box over an empty grid")
    return float((m * m).mean() / (mean * mean))


@dataclass(frozen=True)
class VarianceLacunarity:
    value: float
    exponent: Optional[float]
    sizes: tuple


def default_box_sizes(grid: Grid2D) -> list[int]:
    b = max(grid.base, 2)
    sizes, L = [], b
    while L * b * b <= grid.side:
        sizes.append(L)
        L *= b
    return sizes


def variance_lacunarity(grid: Grid2D, L: int, sizes: Optional[Sequence[int]] = None) -> VarianceLacunarity:
    """Gliding-box variance <s^2> - <s>^2 at L, plus its log-log exponent over `sizes`.

    For a set of dimension D the exponent approaches 2D.
    """
    value = float(np.var(gliding_box_masses(grid, L).astype(float)))
    sizes = tuple(default_box_sizes(grid) if sizes is None else sizes)
    pts = [(math.log(s), float(np.var(gliding_box_masses(grid, s).astype(float)))) for s in sizes]
    pts = [(x, math.log(v)) for x, v in pts if v > 0]
    exponent = float(np.polyfit(*zip(*pts), 1)[0]) if len(pts) >= 2 else None
    return VarianceLacunarity(value=value, exponent=exponent, sizes=sizes)


# --- Kullback-Leibler order ---

def _as_hist(h: Union[Histogram256, Sequence[float]]) -> Histogram256:
    return h if isinstance(h, Histogram256) else Histogram256(np.asarray(h, dtype=float))


def kl_order(f1, f2, eps: float = KL_EPSILON) -> float:
    """sum f1 ln(f1 / f2) over normalised bins, each smoothed by +eps first."""
    a = _as_hist(f1).bins + eps
    b = _as_hist(f2).bins + eps
    a /= a.sum()
    b /= b.sum()
    return float(max(np.sum(a * np.log(a / b)), 0.0))


def interval_histogram(s: IntervalSet) -> Histogram256:
    """Share of the set's length in each of the 256 equal slices of [0, 1]."""
    if len(s) == 0:
        raise EmptyInput("histogram of an empty interval set")
    lo = np.array([float(iv.lo) for iv in s])
    hi = np.array([float(iv.hi) for iv in s])
    edges = np.linspace(0.0, 1.0, HIST_BINS + 1)
    below = np.clip(edges[:, None] - lo[None, :], 0.0, (hi - lo)[None, :]).sum(axis=1)
    mass = np.clip(np.diff(below), 0.0, None)
    if mass.sum() <= 0:
        # zero-length sets: count points instead
        mass = np.histogram(lo, bins=HIST_BINS, range=(0.0, 1.0))[0].astype(float)
    return Histogram256(mass)
