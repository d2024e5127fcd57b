from __future__ import annotations
from dataclasses import dataclass
import numpy as np

from .errors import InvalidSpec


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Square occupancy raster; cells[row, col] with row 0 at the top."""

    cells: np.ndarray
    base: int = 2

    def __post_init__(self):
        arr = np.array(self.cells, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidSpec(f"Grid2D needs a square 2D array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    @classmethod
    def full(cls, side: int, base: int = 2) -> "Grid2D":
        return cls(np.ones((side, side), dtype=bool), base)

    @property
    def side(self) -> int:
        return int(self.cells.shape[0])

    def occupied(self) -> int:
        return int(self.cells.sum())

    def scaled(self, k: int) -> "Grid2D":
        """Each cell becomes a k x k block."""
        return Grid2D(np.kron(self.cells, np.ones((k, k), dtype=bool)), self.base)

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid2D) and np.array_equal(self.cells, other.cells)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Grid3D:
    """Cubic voxel raster indexed cells[z, y, x]."""

    cells: np.ndarray
    base: int = 3

    def __post_init__(self):
        arr = np.array(self.cells, dtype=bool)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise InvalidSpec(f"Grid3D needs a cubic 3D array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    @property
    def side(self) -> int:
        return int(self.cells.shape[0])

    def occupied(self) -> int:
        return int(self.cells.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid3D) and np.array_equal(self.cells, other.cells)

    __hash__ = None


def face_slice(grid: Grid3D, axis: int, index: int) -> Grid2D:
    if axis not in (0, 1, 2):
        raise InvalidSpec(f"axis must be 0, 1 or 2, got {axis}")
    if not 0 <= index < grid.side:
        raise InvalidSpec(f"slice index {index} outside 0..{grid.side - 1}")
    return Grid2D(np.take(grid.cells, index, axis=axis), grid.base)
