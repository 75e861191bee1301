"""Exact free Klein-Gordon flow.

The free evolution is applied as a Fourier multiplier, never by time
stepping, so all discretisation error in a full run comes from the
nonlinear coupling.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .spectral import Grid, GridError, fftn, ifftn, irfftn, rfftn


@dataclass
class State:
    """Real pair ``(u, u_t)`` on a grid at model time ``time``."""

    grid: Grid
    u: np.ndarray
    ut: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.u = _as_real(self.grid, self.u, "u")
        self.ut = _as_real(self.grid, self.ut, "ut")

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))

    def copy(self) -> "State":
        return State(self.grid, self.u.copy(), self.ut.copy(), self.time)

    def scaled(self, lam: float) -> "State":
        return State(self.grid, lam * self.u, lam * self.ut, self.time)

    def __add__(self, other: "State") -> "State":
        _same_grid(self.grid, other.grid)
        return State(self.grid, self.u + other.u, self.ut + other.ut, self.time)

    def __sub__(self, other: "State") -> "State":
        _same_grid(self.grid, other.grid)
        return State(self.grid, self.u - other.u, self.ut - other.ut, self.time)


@dataclass
class VectorState:
    """Complex vector form ``v = <nabla> u - i u_t``."""

    grid: Grid
    v: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex).reshape(self.grid.shape)


def _as_real(grid: Grid, a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        scale = max(float(np.max(np.abs(a.real), initial=0.0)), 1.0)
        if np.max(np.abs(a.imag), initial=0.0) > 1e-12 * scale:
            raise ValueError(f"{name} must be real")
        a = a.real
    a = np.array(a, dtype=float)
    if a.size != grid.size:
        raise GridError(f"{name} has {a.size} samples, grid needs {grid.size}")
    return a.reshape(grid.shape)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridError("states live on different grids")


@lru_cache(maxsize=8)
def _omega(grid: Grid) -> np.ndarray:
    w = np.sqrt(1.0 + grid.ksq)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=8)
def _omega_half(grid: Grid) -> np.ndarray:
    w = grid.rhalf(_omega(grid))
    w.setflags(write=False)
    return w


@lru_cache(maxsize=32)
def _flow_symbols(grid: Grid, dt: float):
    w = _omega_half(grid)
    c, s = np.cos(dt * w), np.sin(dt * w)
    return c, s / w, -w * s


def to_vector(state: State) -> VectorState:
    uh = fftn(state.u) * _omega(state.grid)
    return VectorState(state.grid, ifftn(uh) - 1j * state.ut, state.time)


def from_vector(vs: VectorState) -> State:
    u = ifftn(fftn(vs.v) / _omega(vs.grid)).real
    return State(vs.grid, u, -vs.v.imag, vs.time)


def free_flow(state: State, dt: float) -> State:
    """Apply the exact matrix propagator over ``dt`` (negative allowed)."""
    if dt == 0:
        return state.copy()
    c, s_over_w, mws = _flow_symbols(state.grid, float(dt))
    uh, vh = rfftn(state.u), rfftn(state.ut)
    shape = state.grid.shape
    u = irfftn(c * uh + s_over_w * vh, shape)
    ut = irfftn(mws * uh + c * vh, shape)
    return State(state.grid, u, ut, state.time + dt)


def half_wave(vs: VectorState, dt: float) -> VectorState:
    """Multiply by ``exp(i dt <nabla>)`` in frequency space."""
    if dt == 0:
        return replace(vs, v=vs.v.copy())
    out = ifftn(fftn(vs.v) * np.exp(1j * dt * _omega(vs.grid)))
    return VectorState(vs.grid, out, vs.time + dt)


def free_energy(state: State) -> float:
    """``1/2 int (u_t^2 + |grad u|^2 + u^2)``, gradient term via Parseval."""
    g = state.grid
    uh = rfftn(state.u)
    w2 = _omega_half(g) ** 2
    return 0.5 * g.cell_volume * (float(np.sum(state.ut**2)) + _half_sum(g, w2 * np.abs(uh) ** 2))


def _half_sum(grid: Grid, vals: np.ndarray) -> float:
    """Sum over the full spectrum of a Hermitian-symmetric quantity given on the half spectrum."""
    n = grid.n
    total = 2.0 * float(np.sum(vals))
    total -= float(np.sum(vals[..., 0]))
    total -= float(np.sum(vals[..., n // 2]))
    return total
