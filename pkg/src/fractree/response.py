"""Frequency grids and sampled complex responses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import GridMismatch, NonFinite, ValidationError


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing positive angular frequencies in rad/s."""

    omegas: np.ndarray

    def __init__(self, omegas: Iterable[float]):
        arr = np.array(omegas, dtype=float).ravel()
        if arr.size == 0:
            raise ValidationError("frequency grid is empty")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("frequency grid must be finite")
        if np.any(arr <= 0):
            raise ValidationError("frequency grid must be positive")
        if np.any(np.diff(arr) <= 0):
            raise ValidationError("frequency grid must be strictly increasing")
        arr.setflags(write=False)
        object.__setattr__(self, "omegas", arr)

    @classmethod
    def log(cls, lo: float, hi: float, n: int) -> "FrequencyGrid":
        return cls(np.geomspace(lo, hi, n))

    def __len__(self) -> int:
        return self.omegas.size

    def __eq__(self, other) -> bool:
        return isinstance(other, FrequencyGrid) and np.array_equal(self.omegas, other.omegas)

    @property
    def s(self) -> np.ndarray:
        return 1j * self.omegas


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        if not isinstance(self.grid, FrequencyGrid):
            object.__setattr__(self, "grid", FrequencyGrid(self.grid))
        vals = np.array(self.values, dtype=complex).ravel()
        if vals.size != len(self.grid):
            raise GridMismatch("response length does not match its grid")
        if not np.all(np.isfinite(vals)):
            raise NonFinite("response values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def omegas(self) -> np.ndarray:
        return self.grid.omegas

    def __len__(self) -> int:
        return self.values.size

    def __mul__(self, other):
        if isinstance(other, FrequencyResponse):
            if other.grid != self.grid:
                raise GridMismatch("responses live on different grids")
            other = other.values
        return FrequencyResponse(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FrequencyResponse):
            if other.grid != self.grid:
                raise GridMismatch("responses live on different grids")
            other = other.values
        return FrequencyResponse(self.grid, self.values / other)
