"""Named families of initial data."""
from __future__ import annotations

import numpy as np

from .propagators import State
from .snapshot import load_field
from .spectral import Grid, derivative, fftn, ifftn

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"
FAMILIES = ("zero", "gaussian-bump", "plane-wave", "two-bump", "random-smooth", "file")


def _vec(v, dim: int, default: float = 0.0) -> np.ndarray:
    if v is None:
        return np.full(dim, default)
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.size == 1:
        return np.full(dim, float(a[0]))
    if a.size != dim:
        raise ValueError(f"expected {dim} components, got {a.size}")
    return a


def gaussian(grid: Grid, sigma: float, center=None) -> np.ndarray:
    z = grid.min_image(_vec(center, grid.dim))
    return np.exp(-sum(zi**2 for zi in z) / (2.0 * sigma**2))


def gaussian_bump(grid: Grid, amplitude: float = 1.0, sigma: float = 1.0, center=None, boost=None) -> State:
    """``u = A exp(-|x-c|^2 / 2 sigma^2)``; a boost ``b`` sets ``u_t = -b . grad u``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    u = amplitude * gaussian(grid, sigma, center)
    ut = np.zeros(grid.shape)
    for j, bj in enumerate(_vec(boost, grid.dim)):
        if bj:
            ut = ut - bj * derivative(grid, u, j)
    return State(grid, u, ut)


def plane_wave(grid: Grid, mode, amplitude: float = 1.0, phase: float = 0.0) -> State:
    """``u = A cos(k . x + phase)``, ``u_t = A omega_k sin(k . x + phase)``: a right-moving free wave."""
    k = 2 * np.pi * _vec(mode, grid.dim) / grid.length
    arg = sum(kj * x for kj, x in zip(k, grid.coords())) + phase
    w = np.sqrt(1.0 + float(k @ k))
    return State(grid, amplitude * np.cos(arg), amplitude * w * np.sin(arg))


def two_bump(grid: Grid, separation: float, amplitude: float = 1.0, sigma: float = 1.0, axis: int = 0) -> State:
    c = np.zeros(grid.dim)
    c[axis] = 0.5 * separation
    u = amplitude * (gaussian(grid, sigma, c) + gaussian(grid, sigma, -c))
    return State(grid, u, np.zeros(grid.shape))


def random_smooth(grid: Grid, seed: int, amplitude: float = 1.0, sigma: float = 1.0,
                  envelope: float | None = None) -> State:
    """Random field with spectrum ``exp(-|xi|^2 sigma^2 / 2)`` times a Gaussian window of width ``envelope``.

    Both components are drawn from one PCG64 stream (white noise for ``u``
    first, then ``u_t``) and normalized to unit max before scaling by
    ``amplitude``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    env = gaussian(grid, envelope if envelope else grid.length / 8)
    filt = np.exp(-0.5 * sigma**2 * grid.ksq)
    parts = []
    for _ in range(2):
        a = ifftn(fftn(rng.standard_normal(grid.shape)) * filt).real * env
        m = np.max(np.abs(a))
        parts.append(amplitude * a / m if m else a)
    return State(grid, parts[0], parts[1])


def from_files(grid: Grid, u_path, ut_path=None) -> State:
    fu = load_field(u_path)
    if fu.grid != grid:
        raise ValueError(f"{u_path}: snapshot grid {fu.grid} does not match {grid}")
    ut = np.zeros(grid.shape)
    if ut_path:
        fut = load_field(ut_path)
        if fut.grid != grid:
            raise ValueError(f"{ut_path}: snapshot grid does not match {grid}")
        ut = fut.samples.real
    return State(grid, fu.samples.real, ut)


def build(grid: Grid, family: str, seed: int = 0, **kw) -> State:
    """Dispatch on a family name; keyword arguments are family parameters."""
    if family == "zero":
        return State.zeros(grid)
    if family == "gaussian-bump":
        return gaussian_bump(grid, **kw)
    if family == "plane-wave":
        return plane_wave(grid, **kw)
    if family == "two-bump":
        return two_bump(grid, **kw)
    if family == "random-smooth":
        return random_smooth(grid, seed, **kw)
    if family == "file":
        return from_files(grid, **kw)
    raise ValueError(f"unknown initial-data family {family!r}; choose from {', '.join(FAMILIES)}")
