"""Localised energies, virial actions and the virial identity.

Notation: ``z = x - c`` (minimum image), ``phi_R(z) = phi(|z|/R)``,
``w = z_2 phi_R`` with ``z_2`` the coordinate along :data:`virial_axis`,
``a = u^2``, ``rho = V * a`` and ``G`` the periodic kernel of ``d_2 rho``,
i.e. ``d_2 rho = G (*) a``. With ``V = |x|^-gamma`` the identity for
``A = I + J/2`` reads::

    dA/dt = -int |d_2 u|^2 - c'_2 P_2 - W - I_2 + int (O_1 + O_2 / 2)

    W   = -1/4 sum_{x,y} s_2(x-y) G(x-y) a(x) a(y)
    I_2 = -1/4 sum_{x,y} [w(x) - w(y) - s_2(x-y)] G(x-y) a(x) a(y)
    O_1 = 1/2 [z_2 d_2 phi_R - (1 - phi_R)] Y + (1 - phi_R) |d_2 u|^2
          - z_2 d_2 u (grad phi_R . grad u)
          + c'_2 (1 - phi_R) d_2 u u_t - z_2 (c' . grad phi_R) d_2 u u_t
    O_2 = -(1 - phi_R) X - u grad phi_R . grad u - (c' . grad phi_R) u u_t

with ``X = u_t^2 - u^2 - |grad u|^2 - rho u^2 = -Y`` and ``s_2`` the
minimum-image difference. In the continuum ``W`` is
``gamma/4 iint (x_2-y_2)^2 |x-y|^(-gamma-2) a(x) a(y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .besov import strichartz_exponent, strichartz_integrand
from .nonlinearity import HartreeParams, energy, hartree_potential, momentum
from .propagators import State
from .spectral import Grid, derivative, gradient, ifftn, irfftn, rfftn, riesz_half, riesz_multiplier


def virial_axis(grid: Grid) -> int:
    """Index of the ``x_2`` direction (0-based); falls back to 0 in d = 1."""
    return 1 if grid.dim >= 2 else 0


# --- cutoff ---------------------------------------------------------------

def cutoff_profile(r):
    """Radial bump: 1 on [0, 1], quintic smoothstep down to 0 on [1, 2]."""
    t = np.clip(np.asarray(r, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def cutoff_profile_derivative(r):
    t = np.asarray(r, dtype=float) - 1.0
    inside = (t > 0) & (t < 1)
    return np.where(inside, -30.0 * t**2 * (1.0 - t) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffSpec:
    radius: float
    center: tuple[float, ...] | None = None

    def check(self, grid: Grid) -> None:
        if not self.radius > 0:
            raise ValueError("cutoff radius must be positive")
        if not 2 * self.radius < 0.5 * grid.length:
            raise ValueError(f"cutoff needs 2R < L/2: R = {self.radius}, L = {grid.length}")
        if self.center is not None and len(self.center) != grid.dim:
            raise ValueError("cutoff center has the wrong dimension")


@dataclass
class CutoffFields:
    z: list[np.ndarray]
    r: np.ndarray
    phi: np.ndarray
    grad_phi: list[np.ndarray]


@lru_cache(maxsize=16)
def cutoff_fields(grid: Grid, cutoff: CutoffSpec) -> CutoffFields:
    cutoff.check(grid)
    z = grid.min_image(cutoff.center)
    r = np.sqrt(sum(zi**2 for zi in z))
    R = cutoff.radius
    phi = cutoff_profile(r / R)
    dphi = cutoff_profile_derivative(r / R) / R
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = [np.where(r > 0, zi / r, 0.0) for zi in z]
    return CutoffFields(z, r, phi, [dphi * e for e in unit])


def default_cutoff(grid: Grid) -> CutoffSpec:
    return CutoffSpec(grid.length / 8)


# --- interaction kernels ----------------------------------------------------

@lru_cache(maxsize=16)
def _gradient_kernel(grid: Grid, gamma: float) -> np.ndarray:
    """Periodic kernel ``G`` with ``d_2 (V * a) = sum_y G(x - y) a(y) dx^d``."""
    ax = virial_axis(grid)
    k = grid.wavenumbers(odd=True)[ax]
    vhat = riesz_multiplier(grid, gamma).values
    g = ifftn(1j * k * vhat).real / (grid.cell_volume * grid.size**0.5)
    g.setflags(write=False)
    return g


@lru_cache(maxsize=16)
def _kernel_hat(grid: Grid, gamma: float, method: str) -> np.ndarray:
    ax = virial_axis(grid)
    if method == "spectral":
        s2 = grid.displacements()[ax]
        kern = -0.25 * s2 * _gradient_kernel(grid, gamma)
    elif method == "tabulated":
        kern = tabulated_kernel(grid, gamma)
    else:
        raise ValueError(f"unknown kernel method {method!r}")
    kh = rfftn(kern) * (grid.cell_volume * grid.size**0.5)
    kh.setflags(write=False)
    return kh


def tabulated_kernel(grid: Grid, gamma: float, images: int = 1) -> np.ndarray:
    """``gamma/4 z_2^2 |z|^(-gamma-2)`` summed over ``(2 images + 1)^d`` boxes, 0 at z = 0."""
    ax = virial_axis(grid)
    base = grid.displacements()
    out = np.zeros(grid.shape)
    shifts = np.array(np.meshgrid(*[np.arange(-images, images + 1)] * grid.dim, indexing="ij")).reshape(grid.dim, -1).T
    for n in shifts:
        z = [b + grid.length * ni for b, ni in zip(base, n)]
        r2 = sum(zi**2 for zi in z)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(r2 > 0, z[ax] ** 2 * r2 ** (-(gamma + 2) / 2), 0.0)
        out += val
    return 0.25 * gamma * out


def _convolve(grid: Grid, kernel_hat: np.ndarray, a: np.ndarray) -> np.ndarray:
    return irfftn(kernel_hat * rfftn(a), grid.shape)


def interaction_weighted(grid: Grid, u: np.ndarray, gamma: float = 4.0, method: str = "spectral",
                         clamp: bool = True) -> float:
    """``gamma/4 iint (x_2 - y_2)^2 |x - y|^(-gamma-2) u(x)^2 u(y)^2``.

    ``method="spectral"`` uses the torus kernel ``-1/4 s_2 G`` implied by the
    discrete Riesz symbol (the one the time stepper sees);
    ``method="tabulated"`` tabulates the continuum kernel directly over
    ``3^d`` periodic images. At ``gamma = 4`` the continuum kernel is
    ``z_2^2 / |z|^6``.
    """
    a = u * u
    val = grid.integrate(a * _convolve(grid, _kernel_hat(grid, float(gamma), method), a))
    return max(val, 0.0) if clamp else val


# --- localised functionals --------------------------------------------------

def tail_energy(state: State, cutoff: CutoffSpec, params: HartreeParams) -> float:
    """``int_{|z|>=R} (u^2 + |grad u|^2 + u_t^2) + int_{|z|>=R} rho u^2``."""
    g = state.grid
    cutoff.check(g)
    r = np.sqrt(sum(zi**2 for zi in g.min_image(cutoff.center)))
    outside = r >= cutoff.radius
    dens = state.u**2 + state.ut**2 + sum(d**2 for d in gradient(g, state.u))
    if params.enabled:
        dens = dens + hartree_potential(g, state.u, params) * state.u**2
    return g.integrate(dens * outside)


def _d2(grid: Grid, u: np.ndarray) -> np.ndarray:
    return derivative(grid, u, virial_axis(grid))


def virial_I(state: State, cutoff: CutoffSpec) -> float:
    g = state.grid
    cf = cutoff_fields(g, cutoff)
    w = cf.z[virial_axis(g)] * cf.phi
    return g.integrate(w * _d2(g, state.u) * state.ut)


def virial_J(state: State, cutoff: CutoffSpec) -> float:
    g = state.grid
    return g.integrate(cutoff_fields(g, cutoff).phi * state.u * state.ut)


def action_A(state: State, cutoff: CutoffSpec) -> float:
    return virial_I(state, cutoff) + 0.5 * virial_J(state, cutoff)


@dataclass
class VirialTerms:
    """Right-hand side pieces of the virial identity (see module docstring)."""

    grad2: float
    interaction: float
    I2: float
    momentum_term: float
    O1: float
    O2: float
    bulk_J: float

    @property
    def dA_dt(self) -> float:
        return -self.grad2 - self.momentum_term - self.interaction - self.I2 + self.O1 + 0.5 * self.O2

    @property
    def dJ_dt(self) -> float:
        return self.bulk_J + self.O2


def virial_terms(state: State, cutoff: CutoffSpec, params: HartreeParams, c_dot=None) -> VirialTerms:
    g = state.grid
    ax = virial_axis(g)
    cf = cutoff_fields(g, cutoff)
    u, ut = state.u, state.ut
    cdot = np.zeros(g.dim) if c_dot is None else np.asarray(c_dot, dtype=float)
    grads = gradient(g, u)
    d2u = grads[ax]
    gradsq = sum(d * d for d in grads)
    a = u * u
    if params.enabled:
        params.check(g)
        rho = hartree_potential(g, u, params)
        ah = rfftn(a)
        k = g.wavenumbers(odd=True)[ax]
        if ax == g.dim - 1:
            k = k[..., : g.n // 2 + 1]
        d2rho = irfftn(1j * k * riesz_half(g, params.gamma) * ah, g.shape)
        w_int = interaction_weighted(g, u, params.gamma, "spectral", clamp=False)
    else:
        rho = d2rho = np.zeros(g.shape)
        w_int = 0.0
    z2, phi, gphi = cf.z[ax], cf.phi, cf.grad_phi
    w = z2 * phi
    X = ut**2 - a - gradsq - rho * a
    one_m = 1.0 - phi
    grad_phi_dot_grad_u = sum(gp * gu for gp, gu in zip(gphi, grads))
    cdot_grad_phi = sum(c * gp for c, gp in zip(cdot, gphi))
    O1 = (0.5 * (z2 * gphi[ax] - one_m) * (-X) + one_m * d2u**2 - z2 * d2u * grad_phi_dot_grad_u
          + cdot[ax] * one_m * d2u * ut - z2 * cdot_grad_phi * d2u * ut)
    O2 = -one_m * X - u * grad_phi_dot_grad_u - cdot_grad_phi * u * ut
    half_w_a_d2rho = 0.5 * g.integrate(w * a * d2rho)
    return VirialTerms(
        grad2=g.integrate(d2u**2),
        interaction=w_int,
        I2=-half_w_a_d2rho - w_int,
        momentum_term=float(cdot[ax]) * g.integrate(ut * d2u),
        O1=g.integrate(O1),
        O2=g.integrate(O2),
        bulk_J=g.integrate(X),
    )


def dA_dt_analytic(state: State, cutoff: CutoffSpec, params: HartreeParams, c_dot=None) -> float:
    return virial_terms(state, cutoff, params, c_dot).dA_dt


def fd_derivative(samples, h: float) -> float:
    """Fourth-order central difference from five equally spaced samples."""
    f = np.asarray(samples, dtype=float)
    if f.size != 5:
        raise ValueError("need exactly five samples")
    return float((f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h))


# --- records ------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    time: float
    energy: float
    momentum: np.ndarray
    tail_energy: float = math.nan
    virial_I: float = math.nan
    virial_J: float = math.nan
    action_A: float = math.nan
    dA_dt_analytic: float = math.nan
    interaction_weighted: float = math.nan
    w_norm_increment: float = math.nan
    linf_norm: float = math.nan
    w_integrand: float = math.nan
    extra: dict = field(default_factory=dict)


def make_record(state: State, config, previous: DiagnosticsRecord | None = None) -> DiagnosticsRecord:
    """Diagnostics for one sample; ``config.record_level`` selects the cost."""
    g = state.grid
    params = config.params
    level = getattr(config, "record_level", "full")
    rec = DiagnosticsRecord(state.time, energy(state, params), momentum(state))
    if level == "none":
        return rec
    rec.linf_norm = float(np.max(np.abs(state.u)))
    rec.w_integrand = strichartz_integrand(g, state.u)
    q = strichartz_exponent(g.dim)
    if previous is None or math.isnan(previous.w_integrand):
        rec.w_norm_increment = 0.0
    elif math.isinf(q):
        rec.w_norm_increment = max(0.0, rec.w_integrand - previous.w_integrand)
    else:
        dt = state.time - previous.time
        rec.w_norm_increment = 0.5 * dt * (rec.w_integrand**q + previous.w_integrand**q)
    if level == "light":
        return rec
    cutoff = getattr(config, "cutoff", None) or default_cutoff(g)
    rec.tail_energy = tail_energy(state, cutoff, params)
    rec.virial_I = virial_I(state, cutoff)
    rec.virial_J = virial_J(state, cutoff)
    rec.action_A = rec.virial_I + 0.5 * rec.virial_J
    rec.dA_dt_analytic = dA_dt_analytic(state, cutoff, params)
    gamma = params.gamma if params.enabled else 4.0
    if gamma < g.dim:
        rec.interaction_weighted = interaction_weighted(g, state.u, gamma)
    return rec


CSV_COLUMNS_FIXED = ("tail_energy", "virial_I", "virial_J", "action_A", "dA_dt_analytic",
                     "interaction_weighted", "w_increment", "linf")


def csv_header(dim: int) -> list[str]:
    return ["time", "energy"] + [f"momentum_{j + 1}" for j in range(dim)] + list(CSV_COLUMNS_FIXED)


def csv_row(rec: DiagnosticsRecord) -> list[float]:
    return ([rec.time, rec.energy] + [float(p) for p in rec.momentum]
            + [rec.tail_energy, rec.virial_I, rec.virial_J, rec.action_A, rec.dA_dt_analytic,
               rec.interaction_weighted, rec.w_norm_increment, rec.linf_norm])


# --- identity residuals -------------------------------------------------------

def _window(state: State, params: HartreeParams, dt: float, scheme: str = "strang") -> list[State]:
    """Five states at ``t - 2dt, ..., t + 2dt`` (the splitting is reversible)."""
    from .integrator import step

    back1 = step(state, -dt, params, scheme)
    back2 = step(back1, -dt, params, scheme)
    fwd1 = step(state, dt, params, scheme)
    fwd2 = step(fwd1, dt, params, scheme)
    return [back2, back1, state, fwd1, fwd2]


@dataclass
class IdentityResiduals:
    """Finite-difference minus analytic time derivatives at one state.

    ``virial`` is ``FD(dA/dt) + int |d_2 u|^2 + W`` (exact when the data sit
    inside ``|z| < R``); ``virial_full`` subtracts the complete right side.
    ``equirepartition`` uses the full ``dJ/dt`` display, ``equirepartition_bulk``
    only its bulk integral.
    """

    virial: float
    virial_full: float
    equirepartition: float
    equirepartition_bulk: float


def identity_residuals(states: list[State], dt: float, cutoff: CutoffSpec, params: HartreeParams,
                       c_dot=None) -> IdentityResiduals:
    """Residuals at the middle of five states spaced ``dt`` apart."""
    fd_a = fd_derivative([action_A(s, cutoff) for s in states], dt)
    fd_j = fd_derivative([virial_J(s, cutoff) for s in states], dt)
    t = virial_terms(states[2], cutoff, params, c_dot)
    return IdentityResiduals(
        virial=fd_a + t.grad2 + t.interaction,
        virial_full=fd_a - t.dA_dt,
        equirepartition=fd_j - t.dJ_dt,
        equirepartition_bulk=fd_j - t.bulk_J,
    )


def equirepartition_residual(state: State, cutoff: CutoffSpec, params: HartreeParams, dt: float = 1e-3) -> float:
    """``FD(dJ/dt) - (int X + int O_2)`` with samples from steps of size ``dt`` around ``state``."""
    return identity_residuals(_window(state, params, dt), dt, cutoff, params).equirepartition


def _slope(x, y) -> float:
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    if np.any(y == 0):
        return math.nan
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def convergence_slopes(dts, residuals) -> tuple[float, float]:
    """``(difference_slope, raw_slope)`` of ``|r(dt)|`` against ``dt``.

    The difference slope fits ``|r(dt_i) - r(dt_{i+1})|`` and so cancels any
    dt-independent floor (spatial truncation, tails outside ``R``). With
    only two step sizes there is a single difference, so both entries are
    the raw slope.
    """
    dts, r = np.asarray(dts, float), np.asarray(residuals, float)
    raw = _slope(dts, r)
    if dts.size < 3:
        return raw, raw
    return _slope(dts[:-1], np.diff(r)), raw


@dataclass
class VirialIdentityReport:
    dts: list
    t_star: float
    residuals: list
    slope_virial: float
    slope_virial_raw: float
    slope_equirepartition: float
    slope_equirepartition_raw: float
    A_series: list = field(default_factory=list)
    energy0: float = math.nan

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.residuals])


def virial_identity_experiment(state: State, cutoff: CutoffSpec, params: HartreeParams, dts,
                               t_star: float, scheme: str = "strang") -> VirialIdentityReport:
    """Evolve to ``t_star`` with each ``dt`` and compare FD derivatives with the identities.

    ``A_series`` collects ``A`` at every step of every run (for the
    ``|A| <= C R E`` bound).
    """
    from .integrator import _stepper

    cutoff.check(state.grid)
    dts = sorted((float(d) for d in dts), reverse=True)
    residuals, a_series = [], []
    for dt in dts:
        n0 = round(t_star / dt)
        if abs(n0 * dt - t_star) > 1e-9 or n0 < 2:
            raise ValueError(f"t_star = {t_star} must be a multiple of dt = {dt} with at least 2 steps")
        window, s = [], State(state.grid, state.u, state.ut)
        gen = _stepper(s, dt, params, scheme)
        for k in range(n0 + 3):
            if k:
                s = next(gen)
            a_series.append(action_A(s, cutoff))
            if k >= n0 - 2:
                window.append(s)
        residuals.append(identity_residuals(window, dt, cutoff, params))
    rv = [r.virial for r in residuals]
    rj = [r.equirepartition for r in residuals]
    sv, sv_raw = convergence_slopes(dts, rv)
    sj, sj_raw = convergence_slopes(dts, rj)
    return VirialIdentityReport(dts, t_star, residuals, sv, sv_raw, sj, sj_raw, a_series, energy(state, params))
