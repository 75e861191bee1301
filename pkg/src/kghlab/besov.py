"""Littlewood-Paley blocks, Besov norms and the Strichartz norm W(I).

Dyadic shells are measured in lattice units ``kappa = |xi| L / (2 pi)``.
The partition is built from a cutoff ``theta`` that equals 1 on
``kappa <= 1``, vanishes for ``kappa >= 2`` and is a quintic smoothstep in
``log2(kappa)`` in between:

* ``P0 = theta(kappa)``
* ``Delta_j = theta(kappa / 2^j) - theta(kappa / 2^(j-1))`` for ``1 <= j < jmax``
* ``Delta_jmax = 1 - theta(kappa / 2^(jmax-1))`` (absorbs the lattice corners)

so the symbols sum to one exactly and each lies in ``[0, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

from .propagators import VectorState
from .spectral import Field, Grid, fftn, ifftn, irfftn, rfftn


class WraparoundError(RuntimeError):
    """The dispersing wave reached the periodic boundary."""


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _theta(kappa: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        s = np.log2(np.where(kappa > 0, kappa, 1.0))
    return 1.0 - smoothstep(s)


def jmax(grid: Grid) -> int:
    return int(round(math.log2(grid.n // 2))) - 1


@lru_cache(maxsize=8)
def lp_symbols(grid: Grid) -> tuple[np.ndarray, ...]:
    """Symbols of ``P0, Delta_1, ..., Delta_jmax`` on the full spectrum."""
    kappa = np.sqrt(grid.ksq) * grid.length / (2 * np.pi)
    top = jmax(grid)
    if top == 0:
        syms = [np.ones(grid.shape)]
    else:
        syms = [_theta(kappa)]
        for j in range(1, top):
            syms.append(_theta(kappa / 2**j) - _theta(kappa / 2 ** (j - 1)))
        syms.append(1.0 - _theta(kappa / 2 ** (top - 1)))
    for s in syms:
        s.setflags(write=False)
    return tuple(syms)


@lru_cache(maxsize=8)
def _lp_half(grid: Grid) -> tuple[np.ndarray, ...]:
    return tuple(grid.rhalf(s) for s in lp_symbols(grid))


@dataclass
class LPDecomposition:
    blocks: list[Field]

    def reconstruct(self) -> Field:
        total = sum(b.samples for b in self.blocks)
        return Field(self.blocks[0].grid, "physical", total)


def lp_decompose(f: Field) -> LPDecomposition:
    if f.space != "physical":
        raise ValueError("lp_decompose expects a physical-space field")
    fh = fftn(f.samples)
    return LPDecomposition([Field(f.grid, "physical", ifftn(fh * s)) for s in lp_symbols(f.grid)])


def _real_blocks(grid: Grid, u: np.ndarray) -> list[np.ndarray]:
    uh = rfftn(u)
    return [irfftn(uh * s, grid.shape) for s in _lp_half(grid)]


def lr_norm(grid: Grid, a: np.ndarray, r: float) -> float:
    """Riemann-sum L^r norm; ``r = inf`` is the max."""
    a = np.abs(a)
    if math.isinf(r):
        return float(np.max(a))
    if r == 2:
        return math.sqrt(float(np.sum(a * a)) * grid.cell_volume)
    return float((np.sum(a**r) * grid.cell_volume) ** (1.0 / r))


def block_norms(grid: Grid, u: np.ndarray, r: float) -> np.ndarray:
    """``||P0 u||_r, ||Delta_1 u||_r, ...`` for real or complex ``u``."""
    if np.iscomplexobj(u):
        uh = fftn(u)
        blocks = [ifftn(uh * s) for s in lp_symbols(grid)]
    else:
        blocks = _real_blocks(grid, u)
    return np.array([lr_norm(grid, b, r) for b in blocks])


def besov_from_blocks(norms: np.ndarray, s: float, q: float = 2) -> float:
    weighted = norms * 2.0 ** (s * np.arange(norms.size))
    if math.isinf(q):
        return float(np.max(weighted))
    return float(np.sum(weighted**q) ** (1.0 / q))


def besov_norm(f: Field | np.ndarray, s: float, r: float, q: float = 2, grid: Grid | None = None) -> float:
    """Norm of ``B^s_{r,q}``: ``(||P0 u||_r^q + sum_j (2^{js} ||Delta_j u||_r)^q)^(1/q)``."""
    if isinstance(f, Field):
        grid, u = f.grid, f.samples
        if np.all(u.imag == 0):
            u = u.real
    else:
        u = f
    return besov_from_blocks(block_norms(grid, u, r), s, q)


# --- space-time norm --------------------------------------------------------

def strichartz_exponent(dim: int) -> float:
    """``q = 2(d+1)/(d-1)``; infinite in d = 1."""
    return math.inf if dim == 1 else 2.0 * (dim + 1) / (dim - 1)


def strichartz_integrand(grid: Grid, u: np.ndarray) -> float:
    q = strichartz_exponent(grid.dim)
    return besov_from_blocks(block_norms(grid, u, q), 0.5, 2)


def time_norm(times: np.ndarray, values: np.ndarray, q: float) -> float:
    """Composite-trapezoid ``L^q`` norm in time of sampled nonnegative values."""
    if math.isinf(q):
        return float(np.max(values))
    return float(trapezoid(np.asarray(values) ** q, times) ** (1.0 / q))


def strichartz_W(trajectory, t0: float, t1: float, min_samples: int = 2) -> float:
    """W(I) norm over ``[t0, t1]`` from the recorded Besov integrands."""
    times = trajectory.times
    vals = trajectory.series("w_integrand")
    sel = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    if sel.sum() < min_samples or times[sel][0] > t0 + 1e-9 or times[sel][-1] < t1 - 1e-9:
        raise ValueError(f"trajectory samples do not cover [{t0}, {t1}]")
    return time_norm(times[sel], vals[sel], strichartz_exponent(trajectory.states[0].grid.dim))


# --- interpolation claim and dispersive decay ------------------------------

def h1_norm(grid: Grid, u: np.ndarray) -> float:
    uh = fftn(u)
    return math.sqrt(float(np.sum((1.0 + grid.ksq) * np.abs(uh) ** 2)) * grid.cell_volume)


def interpolation_check(f: Field) -> float:
    """Ratio ``||u||_{2*} / (||u||_{H1}^{(d-2)/d} ||u||_{B^{1-d/2}_{inf,inf}}^{2/d})``."""
    g = f.grid
    if g.dim < 3:
        raise ValueError("interpolation_check needs d >= 3")
    u = f.samples.real
    if not np.any(u):
        return 0.0
    d = g.dim
    lhs = lr_norm(g, u, 2 * d / (d - 2))
    b = besov_norm(u, 1 - d / 2, math.inf, math.inf, grid=g)
    return lhs / (h1_norm(g, u) ** ((d - 2) / d) * b ** (2 / d))


def data_radius(grid: Grid, density: np.ndarray, tol: float = 1e-12) -> float:
    """Smallest radius about the origin outside which ``density`` carries at most ``tol`` of its total."""
    r = np.sqrt(sum(z**2 for z in grid.min_image())).ravel()
    order = np.argsort(r)[::-1]
    # outer mass accumulated from the far end, so tiny tolerances survive rounding
    tail = np.cumsum(density.ravel()[order])
    total = tail[-1]
    if total == 0:
        return 0.0
    inside = np.nonzero(tail > tol * total)[0]
    return float(r[order][inside[0]]) if inside.size else 0.0


def boundary_fraction(grid: Grid, density: np.ndarray, margin: float) -> float:
    """Fraction of ``density`` within ``margin`` of the box faces."""
    near = np.zeros(grid.shape, dtype=bool)
    for z in grid.coords():
        near = near | (np.abs(z) >= 0.5 * grid.length - margin)
    total = float(np.sum(density))
    return float(np.sum(density * near)) / total if total else 0.0


@dataclass
class DecayFit:
    slope: float
    intercept: float
    times: np.ndarray
    linf: np.ndarray


def decay_fit(vs: VectorState, times, boundary_tol: float = 1e-8) -> DecayFit:
    """Fit the log-log slope of ``||u(t)||_inf`` along ``exp(i t <nabla>)``.

    ``u(t) = Re <nabla>^{-1} v(t)``. Refuses to fit (:class:`WraparoundError`)
    if the box is too small for ``times`` or the wave reaches the faces.
    """
    g = vs.grid
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("fit times must be positive")
    radius = data_radius(g, np.abs(vs.v) ** 2)
    if 0.5 * g.length <= times.max() + radius:
        raise WraparoundError(
            f"box half-width {0.5 * g.length} does not exceed t_max + radius = {times.max() + radius:.3f}"
        )
    omega = np.sqrt(1.0 + g.ksq)
    vh = fftn(vs.v)
    linf = []
    for t in times:
        vt = vh * np.exp(1j * t * omega)
        if boundary_fraction(g, np.abs(ifftn(vt)) ** 2, margin=2 * g.spacing) > boundary_tol:
            raise WraparoundError(f"wave reached the boundary by t = {t}")
        linf.append(np.max(np.abs(ifftn(vt / omega).real)))
    linf = np.array(linf)
    slope, intercept = np.polyfit(np.log(times), np.log(linf), 1)
    return DecayFit(float(slope), float(intercept), times, linf)
