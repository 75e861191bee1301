"""Periodic grids, unitary FFTs and Fourier multipliers.

Every other module builds on the objects defined here. Arrays are stored
with shape ``(N,) * d`` in standard FFT ordering (``numpy.fft.fftfreq``);
the frequency lattice is ``2*pi*k/L`` for ``k`` in ``[-N/2, N/2)^d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Literal

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma as gamma_fn

#: Default cap on the total number of grid points, N**d.
MAX_POINTS = 2**24

Space = Literal["physical", "frequency"]


class GridError(ValueError):
    """Raised for invalid grid parameters or mismatched grids."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box ``[-L/2, L/2)^d``."""

    dim: int
    n: int
    length: float

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @cached_property
    def x1d(self) -> np.ndarray:
        return -0.5 * self.length + self.spacing * np.arange(self.n)

    @cached_property
    def k1d(self) -> np.ndarray:
        """Angular wavenumbers along one axis, FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def k1d_odd(self) -> np.ndarray:
        """Wavenumbers for odd symbols (derivatives): Nyquist entry zeroed."""
        k = self.k1d.copy()
        k[self.n // 2] = 0.0
        return k

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        return [_axis_view(self.x1d, ax, self.dim) for ax in range(self.dim)]

    def wavenumbers(self, odd: bool = False) -> list[np.ndarray]:
        k = self.k1d_odd if odd else self.k1d
        return [_axis_view(k, ax, self.dim) for ax in range(self.dim)]

    @cached_property
    def ksq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for k in self.wavenumbers():
            out = out + k**2
        return out

    def rhalf(self, values: np.ndarray) -> np.ndarray:
        """Restrict a full-spectrum array to the ``rfftn`` half spectrum."""
        return np.ascontiguousarray(values[..., : self.n // 2 + 1])

    def min_image(self, center=None) -> list[np.ndarray]:
        """Coordinates ``x - c`` wrapped into ``[-L/2, L/2)``."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        out = []
        for ax, x in enumerate(self.coords()):
            z = x - c[ax]
            out.append((z + 0.5 * self.length) % self.length - 0.5 * self.length)
        return out

    def displacements(self) -> list[np.ndarray]:
        """Lattice displacements in FFT ordering (index 0 is zero shift), wrapped to ``[-L/2, L/2)``."""
        d = self.spacing * np.fft.fftfreq(self.n, d=1.0 / self.n)
        return [_axis_view(d, ax, self.dim) for ax in range(self.dim)]

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_volume)


def _axis_view(v: np.ndarray, ax: int, dim: int) -> np.ndarray:
    shape = [1] * dim
    shape[ax] = v.size
    return v.reshape(shape)


def make_grid(dim: int, n_per_axis: int, box_length: float, max_points: int = MAX_POINTS) -> Grid:
    """Validate and build a :class:`Grid`.

    Raises
    ------
    GridError
        If ``dim`` is outside [1, 5], ``n_per_axis`` is not a power of two
        at least 4, ``box_length`` is not positive, or ``N**d`` exceeds
        ``max_points``.
    """
    if int(dim) != dim or not 1 <= dim <= 5:
        raise GridError(f"dim must be an integer in [1, 5], got {dim}")
    n = int(n_per_axis)
    if n != n_per_axis or n < 4 or n & (n - 1):
        raise GridError(f"n_per_axis must be a power of two >= 4, got {n_per_axis}")
    if not box_length > 0 or not math.isfinite(box_length):
        raise GridError(f"box_length must be positive, got {box_length}")
    if n**dim > max_points:
        raise GridError(f"grid has {n**dim} points, exceeding the memory budget of {max_points}")
    return Grid(int(dim), n, float(box_length))


@dataclass
class Field:
    """Samples of a scalar function on a grid, in one of the two spaces."""

    grid: Grid
    space: Space
    samples: np.ndarray

    def __post_init__(self):
        if self.space not in ("physical", "frequency"):
            raise ValueError(f"unknown space {self.space!r}")
        self.samples = np.asarray(self.samples)
        if self.samples.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} samples, got {self.samples.size}")
        self.samples = self.samples.reshape(self.grid.shape)

    @classmethod
    def physical(cls, grid: Grid, samples) -> "Field":
        return cls(grid, "physical", np.asarray(samples, dtype=complex))

    @property
    def real(self) -> np.ndarray:
        return self.samples.real


@dataclass
class Multiplier:
    """Real Fourier symbol sampled on the frequency lattice."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("multiplier values must be finite")

    @cached_property
    def half(self) -> np.ndarray:
        return self.grid.rhalf(self.values)


# --- transforms -----------------------------------------------------------

def fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, norm="ortho", workers=-1)


def ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, norm="ortho", workers=-1)


def rfftn(a: np.ndarray) -> np.ndarray:
    return sfft.rfftn(a, norm="ortho", workers=-1)


def irfftn(a: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    return sfft.irfftn(a, s=shape, norm="ortho", workers=-1)


def transform(f: Field, direction: Literal["forward", "inverse"]) -> Field:
    """Unitary d-dimensional DFT of ``f``; the input is not modified."""
    if direction == "forward":
        if f.space != "physical":
            raise GridError("forward transform needs a physical-space field")
        return Field(f.grid, "frequency", fftn(f.samples))
    if direction == "inverse":
        if f.space != "frequency":
            raise GridError("inverse transform needs a frequency-space field")
        return Field(f.grid, "physical", ifftn(f.samples))
    raise ValueError(f"unknown direction {direction!r}")


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    """Pointwise product with ``m`` in frequency space, returned in ``f``'s space."""
    if f.grid != m.grid:
        raise GridError("field and multiplier live on different grids")
    if f.space == "frequency":
        return Field(f.grid, "frequency", f.samples * m.values)
    return Field(f.grid, "physical", ifftn(fftn(f.samples) * m.values))


def apply_real(grid: Grid, a: np.ndarray, half_symbol: np.ndarray) -> np.ndarray:
    """Fast path: real array times a real even symbol given on the half spectrum."""
    return irfftn(rfftn(a) * half_symbol, grid.shape)


def derivative(grid: Grid, a: np.ndarray, axis: int) -> np.ndarray:
    """Spectral partial derivative of a real array (Nyquist mode dropped)."""
    k = grid.wavenumbers(odd=True)[axis]
    if axis == grid.dim - 1:
        k = k[..., : grid.n // 2 + 1]
    return irfftn(1j * k * rfftn(a), grid.shape)


def gradient(grid: Grid, a: np.ndarray) -> list[np.ndarray]:
    ah = rfftn(a)
    out = []
    for axis, k in enumerate(grid.wavenumbers(odd=True)):
        if axis == grid.dim - 1:
            k = k[..., : grid.n // 2 + 1]
        out.append(irfftn(1j * k * ah, grid.shape))
    return out


# --- symbols --------------------------------------------------------------

def omega_multiplier(grid: Grid, mass: float = 1.0) -> Multiplier:
    """Symbol ``sqrt(mass**2 + |xi|**2)``: mass 1 gives <nabla>, mass 0 gives |nabla|."""
    if mass < 0:
        raise ValueError("mass must be nonnegative")
    return Multiplier(grid, np.sqrt(mass**2 + grid.ksq))


def riesz_constant(dim: int, gamma: float) -> float:
    """Fourier transform constant of ``|x|**-gamma`` in ``dim`` dimensions.

    ``F[|x|^-g](xi) = c * |xi|^(g-d)`` with
    ``c = pi^(d/2) 2^(d-g) Gamma((d-g)/2) / Gamma(g/2)``.
    """
    if not 0 < gamma < dim:
        raise ValueError(f"gamma must lie in (0, {dim}), got {gamma}")
    return math.pi ** (dim / 2) * 2.0 ** (dim - gamma) * gamma_fn((dim - gamma) / 2) / gamma_fn(gamma / 2)


def riesz_multiplier(grid: Grid, gamma: float) -> Multiplier:
    """Discrete symbol of convolution with ``|x|**-gamma``; zero mode set to 0."""
    return Multiplier(grid, _riesz_values(grid, float(gamma)))


@lru_cache(maxsize=16)
def _riesz_values(grid: Grid, gamma: float) -> np.ndarray:
    c = riesz_constant(grid.dim, gamma)
    ksq = grid.ksq.copy()
    zero = ksq == 0
    ksq[zero] = 1.0
    vals = c * ksq ** ((gamma - grid.dim) / 2)
    vals[zero] = 0.0
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=16)
def riesz_half(grid: Grid, gamma: float) -> np.ndarray:
    out = grid.rhalf(_riesz_values(grid, float(gamma)))
    out.setflags(write=False)
    return out
