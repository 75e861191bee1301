"""Hartree nonlinearity ``f(u) = (|x|^-gamma * u^2) u`` and conserved functionals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagators import State, free_energy
from .spectral import Grid, derivative, irfftn, rfftn, riesz_half


@dataclass(frozen=True)
class HartreeParams:
    gamma: float = 4.0
    enabled: bool = True

    def check(self, grid: Grid) -> None:
        if not 0 < self.gamma < grid.dim:
            raise ValueError(f"gamma must satisfy 0 < gamma < d = {grid.dim}, got {self.gamma}")


def hartree_potential(grid: Grid, u: np.ndarray, params: HartreeParams) -> np.ndarray:
    """``rho = V * u^2`` through the discrete Riesz symbol (zero mean)."""
    if not params.enabled:
        return np.zeros(grid.shape)
    params.check(grid)
    return irfftn(rfftn(u * u) * riesz_half(grid, params.gamma), grid.shape)


def apply_f(grid: Grid, u: np.ndarray, params: HartreeParams) -> np.ndarray:
    return hartree_potential(grid, u, params) * u


def potential_energy(grid: Grid, u: np.ndarray, params: HartreeParams) -> float:
    """Quartic term ``1/4 int rho u^2``, same symbol as the force."""
    if not params.enabled:
        return 0.0
    return 0.25 * grid.integrate(hartree_potential(grid, u, params) * u * u)


def energy(state: State, params: HartreeParams) -> float:
    return free_energy(state) + potential_energy(state.grid, state.u, params)


def momentum(state: State) -> np.ndarray:
    """``P_j = int u_t d_j u``."""
    g = state.grid
    return np.array([g.integrate(state.ut * derivative(g, state.u, j)) for j in range(g.dim)])
