"""Independent brute-force reference computations used by the tests.

Periodized kernels are summed directly over the ``3^d`` nearest image boxes
in physical space; no FFT is involved. The density ``a`` is given as a
callable and summed on a source lattice ``refine`` times finer than the
target lattice. The integrable singularity at ``z = 0`` is removed by
singularity subtraction, ``sum_j K_ij (a_j - a_i) h^d + a_i int K``, where
displacements are wrapped into one period before adding images, so the
``3^d`` images tile the square ``[-3L/2, 3L/2]^2`` centred on each target and
the subtracted integral is that of the bare kernel over this square.
"""
import math

import numpy as np

LOG_1P_SQRT2 = math.log(1.0 + math.sqrt(2.0))


def square_integral_inverse_distance(half_width: float) -> float:
    """``int_{[-A, A]^2} |z|^-1 dz = 8 A ln(1 + sqrt 2)``."""
    return 8.0 * half_width * LOG_1P_SQRT2


def _antiderivative(u, v):
    """``F`` with ``d^2 F / du dv = 1 / sqrt(u^2 + v^2)``."""
    r = np.sqrt(u * u + v * v)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(u != 0, u * np.log(v + r), 0.0)
        t2 = np.where(v != 0, v * np.log(u + r), 0.0)
    return t1 + t2


def square_potential(z1, z2, half_width: float):
    """``int_{[-A, A]^2} |z - y|^-1 dy`` in closed form."""
    a1, b1 = -half_width - z1, half_width - z1
    a2, b2 = -half_width - z2, half_width - z2
    F = _antiderivative
    return F(b1, b2) - F(a1, b2) - F(b1, a2) + F(a1, a2)


def _lattice(n: int, length: float) -> np.ndarray:
    return -0.5 * length + (length / n) * np.arange(n)


def _inv(d1, d2):
    r = np.sqrt(d1**2 + d2**2)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, 1.0 / r, 0.0)


def _w2(d1, d2):
    r2 = d1**2 + d2**2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r2 > 0, d2**2 * r2**-1.5, 0.0)


def _subtracted_sum(density, n: int, length: float, refine: int, kernel, kernel_integral: float,
                    tail=None) -> np.ndarray:
    xt = _lattice(n, length)
    xs = _lattice(n * refine, length)
    hs = length / (n * refine)
    a_src = density(xs[:, None], xs[None, :])
    out = np.zeros((n, n))
    for i1, t1 in enumerate(xt):
        for i2, t2 in enumerate(xt):
            a_i = density(t1, t2)
            # displacements wrapped into [-L/2, L/2), so the images tile a 3L square centred on the target
            z1 = (t1 - xs[:, None] + 0.5 * length) % length - 0.5 * length
            z2 = (t2 - xs[None, :] + 0.5 * length) % length - 0.5 * length
            s = 0.0
            for m1 in (-1, 0, 1):
                for m2 in (-1, 0, 1):
                    k = kernel(z1 - m1 * length, z2 - m2 * length)
                    s += np.sum(k * (a_src - a_i))
            if tail is not None:
                s += np.sum(tail(z1, z2) * a_src)
            out[i1, i2] = s * hs * hs + a_i * kernel_integral
    return out


def periodic_riesz_sum_2d(density, n: int, length: float, refine: int = 4, far_field: bool = True) -> np.ndarray:
    """``rho = |x|^-1 * a`` on the ``n x n`` lattice by direct periodic summation, mean removed.

    The 2-d lattice sum of ``|z - mL|^-1`` converges only like ``1/M`` in
    the number of image rings, so by default the images beyond the 3L
    square are added as their continuum integral,
    ``sum_{m outside} |z - mL|^-1 = const - L^-2 int_{[-3L/2,3L/2]^2} |z - y|^-1 dy``
    (midpoint rule for the far cells).
    """
    tail = None
    if far_field:
        tail = lambda z1, z2: -square_potential(z1, z2, 1.5 * length) / length**2
    rho = _subtracted_sum(density, n, length, refine, _inv, square_integral_inverse_distance(1.5 * length), tail)
    return rho - rho.mean()


def _rectangle_integral_w2(t1, t2, half_width: float):
    """``int_{[-A, A]^2} (t_2 - y_2)^2 |t - y|^-3 dy``; antiderivative ``u ln(v + r)``."""
    def F(u, v):
        r = np.sqrt(u * u + v * v)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u != 0, u * np.log(v + r), 0.0)
    a1, b1 = -half_width - t1, half_width - t1
    a2, b2 = -half_width - t2, half_width - t2
    return F(b1, b2) - F(a1, b2) - F(b1, a2) + F(a1, a2)


def weighted_interaction_free_2d(density, n: int, length: float, refine: int = 4) -> float:
    """``1/4 iint (x_2 - y_2)^2 |x - y|^-3 a(x) a(y)`` on the whole plane (gamma = 1, d = 2).

    ``a`` must be negligible outside ``[-L/2, L/2]^2``. Outer sum on the
    ``n`` lattice, inner sum on the refined lattice over the same square with
    the singularity subtracted against the closed-form square integral.
    """
    xt = _lattice(n, length)
    xs = _lattice(n * refine, length) + 0.5 * length / (n * refine)
    hs = length / (n * refine)
    a_src = density(xs[:, None], xs[None, :])
    total = 0.0
    for t1 in xt:
        for t2 in xt:
            a_i = density(t1, t2)
            if a_i == 0:
                continue
            k = _w2(t1 - xs[:, None], t2 - xs[None, :])
            inner = np.sum(k * (a_src - a_i)) * hs * hs + a_i * _rectangle_integral_w2(t1, t2, 0.5 * length)
            total += a_i * inner
    h = length / n
    return 0.25 * h * h * total
