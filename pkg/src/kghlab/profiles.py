"""Symmetry group of concentrating free waves and finite-n decoupling measurements.

A :class:`SymmetryParams` ``(t_n, x_n, h_n)`` acts by
``T phi(x) = h^(-d/2) phi((x - x_n) / h)``. On the grid the rescaled
function is resampled from the trigonometric interpolant of ``phi``
(a separable non-uniform DFT), with the interpolant cut off outside its
own box so periodic images are not dragged in.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nonlinearity import HartreeParams, energy
from .propagators import VectorState, from_vector, half_wave
from .spectral import Field, Grid, GridError, Multiplier, fftn, ifftn


class SupportError(ValueError):
    """The rescaled profile does not fit in the box, or is unresolved."""


@dataclass(frozen=True)
class SymmetryParams:
    t_shift: float = 0.0
    x_shift: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.scale <= 1:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")
        object.__setattr__(self, "x_shift", tuple(float(v) for v in self.x_shift))

    def shift(self, dim: int) -> np.ndarray:
        if not self.x_shift:
            return np.zeros(dim)
        if len(self.x_shift) != dim:
            raise ValueError(f"x_shift has length {len(self.x_shift)}, grid has d = {dim}")
        return np.array(self.x_shift)

    def check(self, grid: Grid) -> None:
        if self.scale * grid.n < 4:
            raise SupportError(f"scale * N = {self.scale * grid.n:g} < 4: profile is not resolvable")
        self.shift(grid.dim)


def _samples(f) -> tuple[Grid, np.ndarray]:
    if isinstance(f, VectorState):
        return f.grid, f.v
    if isinstance(f, Field):
        if f.space != "physical":
            raise ValueError("expected a physical-space field")
        return f.grid, f.samples
    raise TypeError(f"expected Field or VectorState, got {type(f).__name__}")


def _support_radius(grid: Grid, a: np.ndarray, tol: float) -> float:
    """Max-norm radius beyond which ``|a|^2`` carries at most ``tol`` of the mass."""
    dens = np.abs(a) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    r = np.max(np.abs(np.stack(np.broadcast_arrays(*grid.coords()))), axis=0).ravel()
    order = np.argsort(r)[::-1]
    # outer mass accumulated from the far end, so tiny tolerances stay meaningful
    tail = np.cumsum(dens.ravel()[order])
    inside = np.nonzero(tail > tol * total)[0]
    return float(r[order][inside[0]]) if inside.size else 0.0


def _eval_matrix(grid: Grid, y: np.ndarray) -> np.ndarray:
    """Rows: trig-interpolant basis at points ``y`` (Nyquist as a cosine), zero outside the box."""
    k = grid.k1d
    # basis e^{i k (y - x_0)} / sqrt(N) matches the unitary DFT of samples at x_j = x_0 + j h
    arg = np.outer(y - grid.x1d[0], k)
    mat = np.exp(1j * arg)
    mat[:, grid.n // 2] = np.cos(arg[:, grid.n // 2])
    mat[np.abs(y) >= 0.5 * grid.length] = 0.0
    return mat / math.sqrt(grid.n)


def _resample(grid: Grid, a: np.ndarray, points: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate the interpolant of ``a`` on the tensor grid ``points[0] x points[1] x ...``."""
    out = fftn(a)
    for ax, y in enumerate(points):
        out = np.moveaxis(np.tensordot(_eval_matrix(grid, y), out, axes=([1], [ax])), 0, ax)
    return out


def apply_T(f, params: SymmetryParams, support_tol: float = 1e-10):
    """``h^(-d/2) f((x - x_n) / h)``; returns the same type as ``f``."""
    grid, a = _samples(f)
    params.check(grid)
    h = params.scale
    xn = params.shift(grid.dim)
    rad = _support_radius(grid, a, support_tol)
    if h * rad + np.max(np.abs(xn)) > 0.5 * grid.length:
        raise SupportError(
            f"rescaled support h*r + |x_n| = {h * rad + np.max(np.abs(xn)):.4g} exceeds L/2 = {0.5 * grid.length}"
        )
    if h == 1.0 and not np.any(xn):
        out = a.copy()
    else:
        out = h ** (-grid.dim / 2) * _resample(grid, a, [(grid.x1d - xn[ax]) / h for ax in range(grid.dim)])
    if isinstance(f, VectorState):
        return VectorState(grid, out, f.time)
    if np.isrealobj(a) or not np.any(np.imag(a)):
        out = out.real + 0j
    return Field(grid, "physical", out)


def _scaled_half_wave(grid: Grid, a: np.ndarray, tau: float, mass: float) -> np.ndarray:
    sym = Multiplier(grid, np.sqrt(mass**2 + grid.ksq)).values
    return ifftn(fftn(a) * np.exp(1j * tau * sym))


def concentrating_wave_pair(profile, params: SymmetryParams, t: float) -> tuple[VectorState, VectorState]:
    """Both factorizations ``e^{i<D>(t-t_n)} T phi`` and ``T e^{i<D>_h (t-t_n)/h} phi``."""
    grid, a = _samples(profile)
    s = t - params.t_shift
    first = half_wave(apply_T(VectorState(grid, a), params), s)
    h = params.scale
    evolved = VectorState(grid, _scaled_half_wave(grid, a, s / h, h))
    second = apply_T(evolved, params)
    return VectorState(grid, first.v, t), VectorState(grid, second.v, t)


def concentrating_wave(profile, params: SymmetryParams, t: float, tol: float = 1e-6) -> VectorState:
    """Free concentrating wave at time ``t``; the two factorizations must agree to ``tol``."""
    first, second = concentrating_wave_pair(profile, params, t)
    norm = np.linalg.norm(first.v)
    if norm and np.linalg.norm(first.v - second.v) > tol * norm:
        raise SupportError(
            f"factorizations disagree by {np.linalg.norm(first.v - second.v) / norm:.3g}; refine the grid"
        )
    return first


def pairwise_inner(v1, v2, multiplier: Multiplier | None = None) -> float:
    """``|<mu v1, mu v2>_{L^2}|``; ``mu`` defaults to the identity."""
    g1, a = _samples(v1)
    g2, b = _samples(v2)
    if g1 != g2:
        raise GridError("waves live on different grids")
    if multiplier is not None:
        a = ifftn(fftn(a) * multiplier.values)
        b = ifftn(fftn(b) * multiplier.values)
    return float(abs(np.vdot(a, b)) * g1.cell_volume)


def separation_functional(p1: SymmetryParams, p2: SymmetryParams) -> float:
    """``h1/h2 + h2/h1 + (|t1 - t2| + |x1 - x2|) / h1``."""
    dim = max(len(p1.x_shift), len(p2.x_shift), 1)
    dx = float(np.linalg.norm(p1.shift(dim) - p2.shift(dim)))
    return p1.scale / p2.scale + p2.scale / p1.scale + (abs(p1.t_shift - p2.t_shift) + dx) / p1.scale


def _profile_states(profiles, params_list):
    if len(profiles) != len(params_list):
        raise ValueError("need one SymmetryParams per profile")
    return [concentrating_wave(p, q, 0.0) for p, q in zip(profiles, params_list)]


def energy_decoupling_residual(profiles, params_list, hartree: HartreeParams) -> float:
    """``|E(sum_j v^j(0)) - sum_j E(v^j(0))|`` with the full nonlinear energy."""
    waves = _profile_states(profiles, params_list)
    if len(waves) == 1:
        return 0.0
    total = VectorState(waves[0].grid, sum(w.v for w in waves))
    parts = sum(energy(from_vector(w), hartree) for w in waves)
    return abs(energy(from_vector(total), hartree) - parts)


@dataclass
class SweepRow:
    separation: float
    functional: float
    residual: float
    relative_residual: float
    inner: float


def decoupling_sweep(profile, separations, hartree: HartreeParams, scale: float = 1.0, axis: int = 0) -> list[SweepRow]:
    """Two copies of ``profile`` placed at ``-s/2`` and ``+s/2`` along ``axis``.

    ``inner`` is the normalized overlap ``|<v1, v2>| / (||v1|| ||v2||)``.
    """
    grid, _ = _samples(profile)
    rows = []
    for sep in separations:
        shift = np.zeros(grid.dim)
        shift[axis] = 0.5 * sep
        p1 = SymmetryParams(0.0, tuple(-shift), scale)
        p2 = SymmetryParams(0.0, tuple(shift), scale)
        w1, w2 = _profile_states([profile, profile], [p1, p2])
        res = energy_decoupling_residual([profile, profile], [p1, p2], hartree)
        e = energy(from_vector(VectorState(grid, w1.v + w2.v)), hartree)
        n1, n2 = np.linalg.norm(w1.v), np.linalg.norm(w2.v)
        inner = pairwise_inner(w1, w2) / (n1 * n2 * grid.cell_volume) if n1 and n2 else 0.0
        rows.append(SweepRow(float(sep), separation_functional(p1, p2), res, res / e if e else 0.0, inner))
    return rows


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["separation", "separation_functional", "residual", "relative_residual", "inner"])
        for r in rows:
            w.writerow([repr(r.separation), repr(r.functional), repr(r.residual), repr(r.relative_residual),
                        repr(r.inner)])
