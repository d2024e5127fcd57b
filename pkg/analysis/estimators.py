from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp
from scipy.stats import linregress

from core.errors import DegenerateFit, EmptyInput, InsufficientScales, InvalidSpec, ScaleMismatch
from core.grid import Grid2D, Grid3D
from .multifractal import TwoScaleMeasure, from_box_tau

# empirical Z(q, delta) is unreliable beyond this
Q_LIMIT = 40.0


@dataclass
class BoxCountSeries:
    scales: np.ndarray
    counts: np.ndarray
    probabilities: Optional[list] = None
    sampled: bool = False


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    scale_range: tuple = field(default=(math.nan, math.nan))
    points: int = 0


def scale_list(base: int, k_min: int, k_max: int) -> np.ndarray:
    """delta = base^-k for k = k_min..k_max, coarse to fine."""
    if k_max < k_min:
        raise InvalidSpec(f"empty scale range {k_min}..{k_max}")
    return np.array([float(base) ** -k for k in range(k_min, k_max + 1)])


def parse_scale_range(text: str) -> tuple[int, int]:
    """`k1..k2` or a single `k`."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError:
        raise InvalidSpec(f"bad scale range {text!r}; expected k1..k2")


def _grid_masses(cells: np.ndarray, delta: float) -> np.ndarray:
    side = cells.shape[0]
    box = side * delta
    size = int(round(box))
    if size < 1 or abs(box - size) > 1e-9 * max(box, 1.0) or side % size:
        raise ScaleMismatch(f"box size {box:.6g} cells does not tile a side of {side}")
    masses = cells.astype(np.int64)
    for axis in range(cells.ndim):
        masses = np.add.reduceat(masses, np.arange(0, side, size), axis=axis)
    return masses.ravel()


def _point_masses(points: np.ndarray, delta: float, weights: Optional[np.ndarray]) -> np.ndarray:
    per_side = int(round(1.0 / delta))
    idx = np.clip(np.floor(points / delta).astype(np.int64), 0, per_side - 1)
    flat = np.ravel_multi_index(tuple(idx.T), (per_side,) * points.shape[1])
    _, inverse = np.unique(flat, return_inverse=True)
    return np.bincount(inverse.ravel(), weights=weights)


def box_count(data: Union[Grid2D, Grid3D, np.ndarray], scales: Sequence[float],
              weights: Optional[np.ndarray] = None) -> BoxCountSeries:
    """Occupied-box counts N(delta) and per-box probabilities.

    `data` is a Grid2D/Grid3D, a boolean occupancy array (1D for rasterised
    interval sets), or a float point cloud in the unit cube of shape (N,) or
    (N, d). Grid scales must tile the raster; point scales may be arbitrary
    and are flagged as sampled when 1/delta is not an integer.
    """
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    if len(scales) == 0 or np.any(scales <= 0) or np.any(scales > 1):
        raise InvalidSpec(f"scales must lie in (0, 1], got {scales}")
    if isinstance(data, (Grid2D, Grid3D)):
        data = data.cells
    arr = np.asarray(data)
    counts, probs = [], []
    sampled = False
    if arr.dtype == bool:
        if not arr.any():
            raise EmptyInput("box counting on an empty raster")
        for delta in scales:
            m = _grid_masses(arr, delta)
            m = m[m > 0]
            counts.append(len(m))
            probs.append(m / m.sum())
    else:
        pts = arr.reshape(len(arr), -1).astype(float)
        if len(pts) == 0:
            raise EmptyInput("box counting on an empty point set")
        w = None if weights is None else np.asarray(weights, dtype=float)
        for delta in scales:
            sampled |= abs(1.0 / delta - round(1.0 / delta)) > 1e-9
            m = _point_masses(pts, delta, w)
            m = m[m > 0]
            counts.append(len(m))
            probs.append(m / m.sum())
    return BoxCountSeries(scales=scales, counts=np.array(counts), probabilities=probs, sampled=sampled)


def _fit(x: np.ndarray, y: np.ndarray, scales: np.ndarray) -> FitResult:
    if len(x) < 3:
        raise InsufficientScales(f"need at least 3 scales, got {len(x)}")
    if np.ptp(x) == 0:
        raise DegenerateFit("all scales coincide")
    res = linregress(x, y)
    r2 = 1.0 if np.ptp(y) == 0 else float(res.rvalue) ** 2
    return FitResult(slope=float(res.slope), intercept=float(res.intercept), r2=r2,
                     scale_range=(float(scales.min()), float(scales.max())), points=len(x))


def fit_dimension(series: BoxCountSeries) -> FitResult:
    """Least squares of ln N against ln(1/delta); the slope is the capacity estimate."""
    counts = np.asarray(series.counts, dtype=float)
    if len(counts) >= 3 and np.all(counts == counts[0]):
        raise DegenerateFit(f"all box counts equal ({int(counts[0])}); no scaling range")
    return _fit(-np.log(series.scales), np.log(counts), series.scales)


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def information_dimension(series: BoxCountSeries) -> FitResult:
    """Slope of S(delta) = -sum p ln p against ln(1/delta); empty boxes contribute 0."""
    if series.probabilities is None:
        raise InvalidSpec("information dimension needs per-box probabilities")
    s = np.array([_entropy(p) for p in series.probabilities])
    return _fit(-np.log(series.scales), s, series.scales)


def correlation_integral(points: np.ndarray, scales: Sequence[float]) -> np.ndarray:
    """Fraction of ordered pairs n != m closer than delta (strictly), over N^2."""
    pts = np.asarray(points, dtype=float)
    pts = pts.reshape(len(pts), -1)
    if len(pts) < 2:
        raise EmptyInput(f"correlation integral needs at least 2 points, got {len(pts)}")
    tree = cKDTree(pts)
    radii = np.nextafter(np.asarray(scales, dtype=float), 0)
    order = np.argsort(radii)
    within = np.empty(len(radii))
    within[order] = np.asarray(tree.count_neighbors(tree, radii[order]), dtype=float)
    return (within - len(pts)) / float(len(pts)) ** 2


def correlation_dimension(points: np.ndarray, scales: Sequence[float]) -> FitResult:
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    if len(pts) >= 2 and np.all(pts == pts[0]):
        raise DegenerateFit("all points coincide")
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    c = correlation_integral(pts, scales)
    keep = c > 0
    return _fit(np.log(scales[keep]), np.log(c[keep]), scales[keep])


def renyi_spectrum(data, qs: Sequence[float], scales: Sequence[float],
                   weights: Optional[np.ndarray] = None) -> list[tuple[float, float, float]]:
    """(q, D_q, r2) per q from ln Z(q, delta) = ln sum p_i^q against ln delta.

    q = 1 goes through the information dimension. |q| is capped at Q_LIMIT.
    """
    series = data if isinstance(data, BoxCountSeries) else box_count(data, scales, weights)
    out = []
    log_delta = np.log(series.scales)
    for q in qs:
        q = float(np.clip(q, -Q_LIMIT, Q_LIMIT))
        if q == 1:
            fit = information_dimension(series)
            out.append((q, fit.slope, fit.r2))
            continue
        log_z = np.array([logsumexp(q * np.log(p)) for p in series.probabilities])
        fit = _fit(log_delta, log_z, series.scales)
        tau = from_box_tau(fit.slope)
        out.append((q, tau / (1.0 - q), fit.r2))
    return out


def mass_dimension(rho_true: float, rho_avg: float, L: float) -> float:
    """D_m = 3 - ln(rho_c / rho) / ln L."""
    if L <= 1:
        raise InvalidSpec(f"L must exceed 1, got {L}")
    if rho_true <= 0 or rho_avg <= 0:
        raise InvalidSpec(f"densities must be positive, got {rho_true}, {rho_avg}")
    return 3.0 - math.log(rho_true / rho_avg) / math.log(L)


def two_scale_cells(m: TwoScaleMeasure, depth: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left ends, widths and masses of the 2^depth cells of the weighted refinement."""
    if not 0 <= depth <= 24:
        raise InvalidSpec(f"refinement depth must lie in 0..24, got {depth}")
    lo, width, mass = np.zeros(1), np.ones(1), np.ones(1)
    for _ in range(depth):
        lo = np.concatenate([lo, lo + width * (1.0 - m.l2)])
        width = np.concatenate([width * m.l1, width * m.l2])
        mass = np.concatenate([mass * m.p1, mass * m.p2])
    return lo, width, mass


def two_scale_box_series(m: TwoScaleMeasure, depth: int, k_min: int, k_max: int) -> BoxCountSeries:
    """Dyadic box counts of the refinement, each cell's mass placed at its midpoint."""
    lo, width, mass = two_scale_cells(m, depth)
    return box_count(lo + width / 2, scale_list(2, k_min, k_max), weights=mass)
