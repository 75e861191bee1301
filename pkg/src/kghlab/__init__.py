"""Pseudospectral Klein-Gordon-Hartree simulator and diagnostics lab.

Solves ``u_tt - Laplace(u) + u + (|x|^-gamma * u^2) u = 0`` on a periodic
box with an exact free flow and Strang splitting, and measures the
functionals and identities that govern its long-time behaviour.
"""
from .integrator import EvolveConfig, Trajectory, evolve, step
from .nonlinearity import HartreeParams, energy, momentum
from .propagators import State, VectorState, free_flow, from_vector, half_wave, to_vector
from .spectral import Field, Grid, Multiplier, make_grid

__version__ = "0.1.0"

__all__ = [
    "EvolveConfig", "Field", "Grid", "HartreeParams", "Multiplier", "State", "Trajectory", "VectorState",
    "energy", "evolve", "free_flow", "from_vector", "half_wave", "make_grid", "momentum", "step", "to_vector",
]
