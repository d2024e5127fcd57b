from __future__ import annotations
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from core.errors import CapacityExceeded, InvalidSpec, Undersampled
from core.grid import Grid2D, Grid3D
from core.random_stream import RandomStream
from core.rationals import expansion, has_expansion, parse_rational
from .cantor_sets import Membership

SQRT3 = math.sqrt(3.0)
TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3 / 2]])

MAX_TRIANGLE_GENERATION = 12
MAX_IFS_WORDS = 3 ** 10
MAX_RASTER_SIDE = 4096
MAX_SPONGE_GENERATION = 4


@dataclass(frozen=True)
class AffineMap2D:
    linear: tuple
    offset: tuple

    def __post_init__(self):
        a = np.asarray(self.linear, dtype=float).reshape(2, 2)
        b = np.asarray(self.offset, dtype=float).reshape(2)
        object.__setattr__(self, "linear", tuple(map(tuple, a.tolist())))
        object.__setattr__(self, "offset", tuple(b.tolist()))

    @property
    def A(self) -> np.ndarray:
        return np.array(self.linear)

    @property
    def b(self) -> np.ndarray:
        return np.array(self.offset)

    def __call__(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.A.T + self.b

    def compose(self, inner: "AffineMap2D") -> "AffineMap2D":
        """self o inner."""
        return AffineMap2D(self.A @ inner.A, self.A @ inner.b + self.b)

    def inverse(self) -> "AffineMap2D":
        inv = np.linalg.inv(self.A)
        return AffineMap2D(inv, -inv @ self.b)

    def ratio(self) -> float:
        return float(np.linalg.norm(self.A, 2))


@dataclass(frozen=True)
class IFS:
    """Contracting affine maps; `frame` is the raster frame ifs_render draws them in."""

    maps: tuple
    frame: Optional[AffineMap2D] = None

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise InvalidSpec("an IFS needs at least one map")
        for f in maps:
            if not f.ratio() < 1:
                raise InvalidSpec(f"map {f} is not a contraction (norm {f.ratio():.6g})")
        object.__setattr__(self, "maps", maps)

    def conjugate(self, frame: AffineMap2D) -> "IFS":
        """The same system written in frame coordinates: F o f o F^-1."""
        back = frame.inverse()
        return IFS(tuple(frame.compose(f).compose(back) for f in self.maps))


# Cartesian -> triangle lattice: (x, y) -> (x - y/sqrt3, 2y/sqrt3). The unit
# triangle becomes the lower-left half of the unit square.
LATTICE_FRAME = AffineMap2D(((1.0, -1.0 / SQRT3), (0.0, 2.0 / SQRT3)), (0.0, 0.0))
IDENTITY = AffineMap2D(((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0))


def sierpinski_ifs() -> IFS:
    half = ((0.5, 0.0), (0.0, 0.5))
    return IFS((AffineMap2D(half, (0.0, 0.0)),
                AffineMap2D(half, (0.5, 0.0)),
                AffineMap2D(half, (0.25, SQRT3 / 4))), frame=LATTICE_FRAME)


def vertex_ifs(vertices) -> IFS:
    """Midpoint maps toward each vertex, as used by the chaos game."""
    half = ((0.5, 0.0), (0.0, 0.5))
    return IFS(tuple(AffineMap2D(half, np.asarray(v, dtype=float) / 2) for v in vertices))


def to_lattice(points) -> np.ndarray:
    return LATTICE_FRAME(points)


def from_lattice(points) -> np.ndarray:
    return LATTICE_FRAME.inverse()(points)


# --- subdivision ---

def triangle_cells(n: int) -> np.ndarray:
    """(i, j) lattice indices of the generation-n triangles: exactly those with i & j == 0."""
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    if n > MAX_TRIANGLE_GENERATION:
        raise CapacityExceeded(f"triangle generation {n} exceeds {MAX_TRIANGLE_GENERATION}")
    side = 1 << n
    i, j = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    keep = (i & j) == 0
    return np.stack([i[keep], j[keep]], axis=1)


def triangle_subdivide(n: int) -> np.ndarray:
    """3^n upward triangles of side 2^-n, shape (3^n, 3, 2) in Cartesian coordinates."""
    cells = triangle_cells(n).astype(float)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    lattice = (cells[:, None, :] + corners[None, :, :]) / (1 << n)
    return from_lattice(lattice)


def triangle_raster(n: int) -> Grid2D:
    """Lattice-frame raster at resolution 2^n: cell (row, col) holds triangle (col, side-1-row)."""
    side = 1 << n
    cells = np.zeros((side, side), dtype=bool)
    ij = triangle_cells(n)
    cells[side - 1 - ij[:, 1], ij[:, 0]] = True
    return Grid2D(cells, 2)


def triangle_area(n: int) -> Fraction:
    return Fraction(3, 4) ** n


def removed_area(n: int) -> Fraction:
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    return 1 - Fraction(3, 4) ** n


def removed_area_series(n: int) -> list[Fraction]:
    return [Fraction(1, 4) * Fraction(3, 4) ** (k - 1) for k in range(1, n + 1)]


def perimeter_sum(n: int) -> Fraction:
    """Total perimeter of the removed triangles through generation n, unit-side initiator."""
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    return 3 * (Fraction(3, 2) ** n - 1)


def perimeter_series(n: int) -> list[Fraction]:
    return [Fraction(3, 2) ** k for k in range(1, n + 1)]


# --- IFS rendering and chaos game ---

def compose_words(ifs: IFS, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear parts (N, 2, 2) and offsets (N, 2) of every length-n composition."""
    if len(ifs.maps) ** n > MAX_IFS_WORDS:
        raise CapacityExceeded(f"{len(ifs.maps)}^{n} compositions exceeds {MAX_IFS_WORDS}")
    A = np.eye(2)[None, :, :]
    b = np.zeros((1, 2))
    for _ in range(n):
        nA, nb = [], []
        for f in ifs.maps:
            nA.append(np.einsum("ij,njk->nik", f.A, A))
            nb.append(b @ f.A.T + f.b)
        A, b = np.concatenate(nA), np.concatenate(nb)
    return A, b


def ifs_render(ifs: IFS, n: int, resolution: int, frame: Optional[AffineMap2D] = None) -> Grid2D:
    """Rasterise the n-fold image of the unit-square seed.

    The system is first rewritten in `frame` coordinates (default: the
    system's own frame, IDENTITY for raw coordinates) and the seed and raster
    live there. A cell is occupied when its centre lies in some image of the seed.
    """
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    if resolution < 1 or resolution & (resolution - 1):
        raise InvalidSpec(f"resolution must be a power of 2, got {resolution}")
    if resolution > MAX_RASTER_SIDE:
        raise CapacityExceeded(f"resolution {resolution} exceeds {MAX_RASTER_SIDE}")
    frame = frame if frame is not None else ifs.frame
    system = ifs.conjugate(frame) if frame is not None else ifs
    r = max(f.ratio() for f in system.maps)
    if resolution * r ** n < 1 - 1e-9:
        raise Undersampled(f"resolution {resolution} cannot resolve pieces of size {r ** n:.6g}")
    A, b = compose_words(system, n)
    cells = np.zeros((resolution, resolution), dtype=bool)
    eps = 1e-9
    unit = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    for Ak, bk in zip(A, b):
        corners = unit @ Ak.T + bk
        lo = np.clip(np.floor(corners.min(axis=0) * resolution - 0.5).astype(int), 0, resolution - 1)
        hi = np.clip(np.ceil(corners.max(axis=0) * resolution - 0.5).astype(int), 0, resolution - 1)
        cols = np.arange(lo[0], hi[0] + 1)
        rows = np.arange(lo[1], hi[1] + 1)
        cx, cy = np.meshgrid((cols + 0.5) / resolution, (rows + 0.5) / resolution, indexing="xy")
        centres = np.stack([cx.ravel(), cy.ravel()], axis=1)
        u = (centres - bk) @ np.linalg.inv(Ak).T
        inside = np.all((u >= -eps) & (u <= 1 + eps), axis=1).reshape(cx.shape)
        yy, xx = np.nonzero(inside)
        cells[resolution - 1 - rows[yy], cols[xx]] = True
    return Grid2D(cells, 2)


def chaos_game(system: Union[IFS, Sequence], points: int, transient: int = 0, seed: int = 0,
               start=None) -> np.ndarray:
    """Random iteration p <- f_c(p), c = next_choice(#maps) from a SplitMix64 stream.

    A vertex triple is turned into its midpoint maps. The default start is the
    fixed point of the first map, which lies on the attractor.
    """
    ifs = system if isinstance(system, IFS) else vertex_ifs(system)
    if points < 1 or transient < 0:
        raise InvalidSpec(f"need points >= 1 and transient >= 0, got {points}, {transient}")
    total = points + transient
    choices = RandomStream(seed).next_choice_array(total, len(ifs.maps))
    if start is None:
        f0 = ifs.maps[0]
        start = np.linalg.solve(np.eye(2) - f0.A, f0.b)
    p0 = np.asarray(start, dtype=float)
    offsets = np.array([f.b for f in ifs.maps])[choices]
    A0 = ifs.maps[0].A
    uniform = all(np.allclose(f.A, A0[0, 0] * np.eye(2), rtol=0, atol=0) for f in ifs.maps)
    if uniform:
        # p_k = s p_{k-1} + b_k is a first-order recursive filter
        s = A0[0, 0]
        out = np.empty((total, 2))
        for axis in range(2):
            out[:, axis], _ = lfilter([1.0], [1.0, -s], offsets[:, axis], zi=[s * p0[axis]])
    else:
        out = np.empty((total, 2))
        p = p0
        linears = [f.A for f in ifs.maps]
        for k in range(total):
            p = linears[choices[k]] @ p + offsets[k]
            out[k] = p
    return out[transient:]


def in_subdivision(points, G: int, tol: float = 1e-9) -> np.ndarray:
    """True where a point lies within tol (in generation-G cell units) of a surviving triangle."""
    uv = to_lattice(points) * (1 << G)
    side = 1 << G
    ok = np.zeros(len(uv), dtype=bool)
    for du, dv in product((-tol, tol), repeat=2):
        i = np.floor(uv[:, 0] + du).astype(np.int64)
        j = np.floor(uv[:, 1] + dv).astype(np.int64)
        valid = (i >= 0) & (j >= 0) & (i < side) & (j < side)
        ii, jj = np.where(valid, i, 0), np.where(valid, j, 0)
        frac = (uv[:, 0] - ii) + (uv[:, 1] - jj)
        ok |= valid & ((ii & jj) == 0) & (frac <= 1 + tol) & (uv[:, 0] - ii >= -tol) & (uv[:, 1] - jj >= -tol)
    return ok


def sir_pinsky_step(p, v) -> np.ndarray:
    """Double the distance from vertex v."""
    return 2 * np.asarray(p, dtype=float) - np.asarray(v, dtype=float)


def nearest_vertex(p, vertices=TRIANGLE) -> np.ndarray:
    vs = np.asarray(vertices, dtype=float)
    return vs[np.argmin(np.linalg.norm(vs - np.asarray(p, dtype=float), axis=1))]


def _barycentric(bary) -> tuple[Fraction, Fraction, Fraction]:
    coords = tuple(parse_rational(c) for c in bary)
    if len(coords) != 3 or any(c < 0 for c in coords) or sum(coords) != 1:
        raise InvalidSpec(f"barycentric coordinates must be three non-negatives summing to 1, got {bary}")
    return coords


def sir_pinsky_game(bary, depth: int) -> Membership:
    """Exact game in barycentric coordinates: expand from the vertex of the largest coordinate.

    OUT once a coordinate turns negative, IN once the orbit repeats.
    """
    p = _barycentric(bary)
    seen = set()
    for _ in range(depth):
        if p in seen:
            return Membership.IN
        seen.add(p)
        k = max(range(3), key=lambda i: p[i])
        p = tuple(2 * c - (1 if i == k else 0) for i, c in enumerate(p))
        if min(p) < 0:
            return Membership.OUT
    return Membership.IN if p in seen else Membership.UNDECIDED


def _binary_digits(x: Fraction, depth: int, lower: bool) -> list[int]:
    it = expansion(x, 2, lower)
    return [next(it)[0] for _ in range(depth)]


def barycentric_membership(x, y, z, depth: int) -> Membership:
    """IN when, for some choice of binary expansions, every place up to depth has exactly one 1."""
    coords = _barycentric((x, y, z))
    options = []
    for c in coords:
        forms = {tuple(_binary_digits(c, depth, lower)) for lower in (False, True) if has_expansion(c, lower)}
        options.append(forms)
    for a, b, c in product(*options):
        if all(da + db + dc == 1 for da, db, dc in zip(a, b, c)):
            return Membership.IN
    return Membership.OUT


# --- carpets ---

@dataclass(frozen=True)
class CarpetSpec:
    base: int
    kept: frozenset

    def __post_init__(self):
        kept = frozenset((int(r), int(c)) for r, c in self.kept)
        object.__setattr__(self, "kept", kept)
        if self.base < 2:
            raise InvalidSpec(f"carpet base must be >= 2, got {self.base}")
        if not all(0 <= r < self.base and 0 <= c < self.base for r, c in kept):
            raise InvalidSpec(f"kept cells must lie in the {self.base}x{self.base} generator")
        if not kept:
            raise InvalidSpec("a carpet generator keeps at least one cell")

    def generator(self) -> np.ndarray:
        g = np.zeros((self.base, self.base), dtype=bool)
        for r, c in self.kept:
            g[r, c] = True
        return g


STANDARD_CARPET = CarpetSpec(3, frozenset((r, c) for r in range(3) for c in range(3) if (r, c) != (1, 1)))
CANTOR_DUST = CarpetSpec(3, frozenset({(0, 0), (0, 2), (2, 0), (2, 2)}))


def ring_carpet(b: int) -> CarpetSpec:
    """Border ring of the b x b generator: 4(b - 1) cells."""
    return CarpetSpec(b, frozenset((r, c) for r in range(b) for c in range(b)
                                   if r in (0, b - 1) or c in (0, b - 1)))


def carpet_generate(spec: CarpetSpec, n: int) -> Grid2D:
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    if spec.base ** n > MAX_RASTER_SIDE:
        raise CapacityExceeded(f"carpet side {spec.base}^{n} exceeds {MAX_RASTER_SIDE}")
    g = spec.generator()
    cells = np.ones((1, 1), dtype=bool)
    for _ in range(n):
        cells = np.kron(g, cells)
    return Grid2D(cells, spec.base)


def carpet_dimension(spec: CarpetSpec) -> float:
    return math.log(len(spec.kept)) / math.log(spec.base)


def carpet_area(n: int) -> Fraction:
    return Fraction(8, 9) ** n


def centered_carpet_dimension(b: int) -> float:
    return math.log(4 * (b - 1)) / math.log(b)


def wide_ring_dimension(b: int) -> float:
    """As printed, ln(b^3 - 1) / ln b. This exceeds 2 for b >= 3, so it cannot be a planar carpet dimension."""
    return math.log(b ** 3 - 1) / math.log(b)


def cheese_dimension(k: int) -> float:
    return math.log(3 ** k - 1) / math.log(3)


# --- sponge and pyramid ---

def sponge_generator() -> np.ndarray:
    g = np.ones((3, 3, 3), dtype=bool)
    for z, y, x in product(range(3), repeat=3):
        if (z == 1) + (y == 1) + (x == 1) >= 2:
            g[z, y, x] = False
    return g


def sponge_generate(n: int) -> Grid3D:
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    if n > MAX_SPONGE_GENERATION:
        raise CapacityExceeded(f"sponge generation {n} exceeds {MAX_SPONGE_GENERATION}")
    g = sponge_generator()
    cells = np.ones((1, 1, 1), dtype=bool)
    for _ in range(n):
        cells = np.kron(g, cells)
    return Grid3D(cells, 3)


def sponge_volume(n: int) -> Fraction:
    return Fraction(20, 27) ** n


def pyramid_counts(n: int) -> dict:
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")
    volume = Fraction(1, 2) ** n
    return {"tetrahedra": 4 ** n, "volume": volume, "removed": 1 - volume}


def product_dimensions() -> dict:
    ln = math.log
    return {
        "triadic_cantor": ln(2) / ln(3),
        "middle_fifth": ln(4) / ln(5),
        "decimal_nine_digits": ln(9) / ln(10),
        "decimal_eight_digits": ln(8) / ln(10),
        "decimal_seven_digits": ln(7) / ln(10),
        "triangle": ln(3) / ln(2),
        "carpet": carpet_dimension(STANDARD_CARPET),
        "cantor_dust": 2 * ln(2) / ln(3),
        "four_corner_dust": ln(4) / ln(3),
        "sponge": ln(20) / ln(3),
        "cheese": cheese_dimension(3),
        "c4_cube": 3 * ln(2) / ln(8 / 3),
        "c4_square": 2 * ln(2) / ln(8 / 3),
        "base7_carpet": ln(40) / ln(7),
        "pyramid": ln(4) / ln(2),
    }
