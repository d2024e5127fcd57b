from __future__ import annotations
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import ndimage
from scipy.optimize import brentq

from core.errors import (CapacityExceeded, DegenerateFixedPoint, InvalidSpec, IrrelevantFixedPoint,
                         NoFixedPoint)
from core.logging_io import RunLog
from core.random_stream import RandomStream, derive_seed
from .sierpinski import STANDARD_CARPET, carpet_generate

GENERATOR_CELLS = 8
MAX_LATTICE_GENERATION = 6
MAX_BISECTIONS = 12
FIXED_POINT_EDGE = 1e-6
FIXED_POINT_TOL = 1e-12
CARPET_DIMENSION = math.log(8) / math.log(3)

# 3x3 generator minus the centre, row-major
RING = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2))


class ConnectivityRule(str, Enum):
    EDGE = "edge"
    HYBRID = "hybrid"

    @property
    def offsets(self) -> tuple:
        side = ((-1, 0), (1, 0), (0, -1), (0, 1))
        if self is ConnectivityRule.EDGE:
            return side
        return side + ((-1, -1), (-1, 1), (1, -1), (1, 1))

    @property
    def structure(self) -> np.ndarray:
        if self is ConnectivityRule.EDGE:
            return ndimage.generate_binary_structure(2, 1)
        return ndimage.generate_binary_structure(2, 2)


def parse_rule(text) -> ConnectivityRule:
    try:
        return ConnectivityRule(str(text).lower())
    except ValueError:
        raise InvalidSpec(f"unknown connectivity rule {text!r}; expected edge or hybrid")


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1

    def num_components(self) -> int:
        return len({self.find(i) for i in range(len(self.parent))})


def spans_union_find(cells: np.ndarray, rule: ConnectivityRule) -> bool:
    """Left-right spanning of an occupancy raster, labelled with UnionFind."""
    cells = np.asarray(cells, dtype=bool)
    rows, cols = cells.shape
    uf = UnionFind(rows * cols)
    for r, c in zip(*np.nonzero(cells)):
        for dr, dc in rule.offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols and cells[rr, cc]:
                uf.union(r * cols + c, rr * cols + cc)
    left = {uf.find(r * cols) for r in range(rows) if cells[r, 0]}
    return any(uf.find(r * cols + cols - 1) in left for r in range(rows) if cells[r, cols - 1])


def spans(cells: np.ndarray, rule: ConnectivityRule) -> bool:
    """Left-right spanning via scipy labelling."""
    labels, _ = ndimage.label(cells, structure=rule.structure)
    left, right = labels[:, 0], labels[:, -1]
    return np.intersect1d(left[left > 0], right[right > 0]).size > 0


# --- renormalisation polynomial ---

@dataclass(frozen=True)
class RGPolynomial:
    """R(p) = sum c_k p^k (1-p)^(8-k) over the 8 generator cells."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != GENERATOR_CELLS + 1:
            raise InvalidSpec(f"need {GENERATOR_CELLS + 1} counts c0..c8, got {len(counts)}")
        for k, c in enumerate(counts):
            if not 0 <= c <= math.comb(GENERATOR_CELLS, k):
                raise InvalidSpec(f"c{k} = {c} outside 0..C(8, {k})")
        object.__setattr__(self, "counts", counts)

    @property
    def power_form(self) -> Polynomial:
        p, q = Polynomial([0, 1]), Polynomial([1, -1])
        total = Polynomial([0])
        for k, c in enumerate(self.counts):
            if c:
                total = total + c * p ** k * q ** (GENERATOR_CELLS - k)
        return total

    def __call__(self, p: float) -> float:
        return float(self.power_form(p))

    def derivative(self, p: float) -> float:
        return float(self.power_form.deriv()(p))


def _pattern_cells(pattern: int) -> np.ndarray:
    cells = np.zeros((3, 3), dtype=bool)
    for bit, (r, c) in enumerate(RING):
        if pattern >> bit & 1:
            cells[r, c] = True
    return cells


def spanning_patterns(rule: ConnectivityRule) -> list[int]:
    """Bit patterns over RING (bit i = cell i) whose occupied cells span left to right."""
    return [pat for pat in range(1 << GENERATOR_CELLS) if spans_union_find(_pattern_cells(pat), rule)]


def enumerate_rg(rule: ConnectivityRule) -> RGPolynomial:
    counts = [0] * (GENERATOR_CELLS + 1)
    for pat in spanning_patterns(rule):
        counts[bin(pat).count("1")] += 1
    return RGPolynomial(tuple(counts))


# hybrid polynomial as printed; the enumeration gives c4 = 31
PUBLISHED_HYBRID = RGPolynomial((0, 0, 0, 8, 38, 44, 27, 8, 1))


def rg_apply(poly: RGPolynomial, p: float) -> float:
    p = float(p)
    if not 0 <= p <= 1:
        raise InvalidSpec(f"p must lie in [0, 1], got {p}")
    return poly(p)


def fixed_point(poly: RGPolynomial) -> float:
    """Relevant interior root of R(p) = p (the one with R' > 1)."""
    g = poly.power_form - Polynomial([0, 1])
    if np.all(np.abs(g.coef) < 1e-12):
        raise DegenerateFixedPoint("R(p) = p identically: continuum of fixed points")
    grid = np.linspace(FIXED_POINT_EDGE, 1 - FIXED_POINT_EDGE, 1001)
    values = g(grid)
    roots = []
    for a, b, ga, gb in zip(grid, grid[1:], values, values[1:]):
        if ga == 0:
            roots.append(float(a))
        elif ga * gb < 0:
            roots.append(brentq(lambda x: float(g(x)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if values[-1] == 0:
        roots.append(float(grid[-1]))
    roots = [r for r in roots if abs(g(r)) < FIXED_POINT_TOL]
    if not roots:
        raise NoFixedPoint(f"R(p) - p has no interior root for counts {poly.counts}")
    relevant = [r for r in roots if poly.derivative(r) > 1]
    return relevant[0] if relevant else roots[0]


@dataclass(frozen=True)
class ExponentFamily:
    p_c: float
    lambda_: float
    nu: float
    beta: float
    gamma: float
    alpha_heat: float
    delta_gap: float

    def to_dict(self) -> dict:
        return {"p_c": self.p_c, "lambda": self.lambda_, "nu": self.nu, "beta": self.beta,
                "gamma": self.gamma, "alpha": self.alpha_heat, "delta": self.delta_gap}


def critical_exponents(poly: RGPolynomial, b: int = 3, D_carpet: float = CARPET_DIMENSION,
                       d: int = 2) -> ExponentFamily:
    p_c = fixed_point(poly)
    lam = poly.derivative(p_c)
    if lam <= 1:
        raise IrrelevantFixedPoint(f"R'(p_c) = {lam:.12g} <= 1 at p_c = {p_c:.12g}")
    nu = math.log(b) / math.log(lam)
    beta = nu * (d - D_carpet)
    return ExponentFamily(p_c=p_c, lambda_=lam, nu=nu, beta=beta, gamma=nu * d - 2 * beta,
                          alpha_heat=2 - nu * d, delta_gap=nu * d - beta)


def rg_report(rule: ConnectivityRule, source: str = "enumerated") -> dict:
    """JSON-ready RG result: counts, exponents and notes on printed values."""
    if source == "published":
        if rule is not ConnectivityRule.HYBRID:
            raise InvalidSpec("only the hybrid polynomial has a published form")
        poly = PUBLISHED_HYBRID
    elif source == "enumerated":
        poly = enumerate_rg(rule)
    else:
        raise InvalidSpec(f"unknown polynomial source {source!r}")
    exps = critical_exponents(poly)
    notes = []
    if rule is ConnectivityRule.HYBRID:
        if source == "enumerated":
            notes.append(f"enumerated c4 = {poly.counts[4]}; the printed polynomial has c4 = 38 "
                         "(use --source published)")
        notes.append(f"printed delta = 1.809 disagrees with nu*d - beta = {exps.delta_gap:.12g}")
    else:
        notes.append(f"printed edge-rule values nu = 2.194, beta = 0.234; "
                     f"enumeration gives nu = {exps.nu:.12g}, beta = {exps.beta:.12g}")
    report = {"rule": rule.value, "source": source, "counts": list(poly.counts)}
    report.update(exps.to_dict())
    report["notes"] = notes
    return report


# --- Monte Carlo on carpet lattices ---

@dataclass
class CarpetLattice:
    generation: int
    rule: ConnectivityRule = ConnectivityRule.HYBRID
    mask: np.ndarray = field(init=False, repr=False)
    sites: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.generation <= MAX_LATTICE_GENERATION:
            raise CapacityExceeded(f"lattice generation must lie in 0..{MAX_LATTICE_GENERATION}, "
                                   f"got {self.generation}")
        self.mask = carpet_generate(STANDARD_CARPET, self.generation).cells
        self.sites = np.flatnonzero(self.mask)

    @property
    def side(self) -> int:
        return self.mask.shape[0]

    def occupy(self, p: float, stream: RandomStream) -> np.ndarray:
        """One draw per carpet cell in row-major order; a cell is open iff u < p."""
        open_cells = np.zeros(self.mask.size, dtype=bool)
        open_cells[self.sites] = stream.next_unit_array(len(self.sites)) < p
        return open_cells.reshape(self.mask.shape)

    def spans(self, open_cells: np.ndarray) -> bool:
        return spans(open_cells, self.rule)


def _check_mc(p: float, trials: int) -> None:
    if not 0 <= p <= 1:
        raise InvalidSpec(f"p must lie in [0, 1], got {p}")
    if trials < 1:
        raise InvalidSpec(f"trials must be >= 1, got {trials}")


def _fraction(lattice: CarpetLattice, p: float, trials: int, seed: int) -> tuple[float, float]:
    hits = sum(lattice.spans(lattice.occupy(p, RandomStream(derive_seed(seed, t)))) for t in range(trials))
    f = hits / trials
    return f, math.sqrt(f * (1 - f) / trials)


def mc_spanning(G: int, rule: ConnectivityRule, p: float, trials: int, seed: int = 0,
                log: Optional[RunLog] = None) -> tuple[float, float]:
    """Spanning fraction over `trials` independent occupations, with binomial standard error.

    Trial t draws from RandomStream(derive_seed(seed, t)), so the same uniforms
    are reused at every p.
    """
    p = float(p)
    _check_mc(p, trials)
    lattice = CarpetLattice(G, rule)
    f, err = _fraction(lattice, p, trials, seed)
    if log is not None:
        log.log("result", {"G": G, "rule": rule.value, "p": p, "trials": trials, "fraction": f, "stderr": err})
    return f, err


@dataclass(frozen=True)
class ThresholdEstimate:
    p: float
    uncertainty: float
    iterations: int
    monotone: bool
    history: tuple = ()


def mc_threshold(G: int, rule: ConnectivityRule, trials: int, seed: int = 0,
                 log: Optional[RunLog] = None) -> ThresholdEstimate:
    """Bisect p until the spanning fraction is within 2 stderr of 1/2.

    The declared uncertainty is the larger of the final half-bracket and the
    worst-case binomial error 1/(2 sqrt(trials)).
    """
    _check_mc(0.5, trials)
    lattice = CarpetLattice(G, rule)
    lo, hi = 0.0, 1.0
    history = []
    mid = 0.5
    for it in range(1, MAX_BISECTIONS + 1):
        mid = (lo + hi) / 2
        f, err = _fraction(lattice, mid, trials, seed)
        history.append((mid, f, err))
        if log is not None:
            log.log("bisect", {"iteration": it, "p": mid, "fraction": f, "stderr": err, "lo": lo, "hi": hi})
        if err > 0 and abs(f - 0.5) < 2 * err:
            break
        if f < 0.5:
            lo = mid
        else:
            hi = mid
    ordered = sorted(history)
    monotone = all(a[1] <= b[1] for a, b in zip(ordered, ordered[1:]))
    if not monotone and log is not None:
        log.log("error", {"reason": "non-monotone spanning fractions", "history": history})
    uncertainty = max((hi - lo) / 2, 0.5 / math.sqrt(trials))
    return ThresholdEstimate(p=mid, uncertainty=uncertainty, iterations=len(history),
                             monotone=monotone, history=tuple(history))


def is_monotone(poly: RGPolynomial, step: float = 1e-3) -> bool:
    ps = np.arange(0.0, 1.0 + step / 2, step)
    values = poly.power_form(ps)
    return bool(np.all(np.diff(values) >= -1e-12))


def pattern_monotone(rule: ConnectivityRule) -> bool:
    """Adding any cell to a spanning pattern keeps it spanning."""
    spanning = set(spanning_patterns(rule))
    return all((pat | 1 << bit) in spanning for pat in spanning for bit in range(GENERATOR_CELLS))
