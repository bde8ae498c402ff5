"""Harmonic and alpha-harmonic extension of boundary data into the strip.

Point values use adaptive quadrature against the Poisson kernel (or, for
``alpha > 0``, a time integral of heat-smoothed data against the hitting
densities). Global quantities such as the L2 norm of the extension are
computed on the Fourier side in ``x1`` with exact ``x2`` integrals, see
:mod:`striplab.spectral`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate

from .boundary import BoundaryData, BoundaryFunction, Constant
from .kernels import (
    BoundarySide,
    InteriorPoint,
    QuadratureError,
    exit_probability,
    hitting_time_density,
    poisson_kernel,
    poisson_kernel_grad,
)
from .spectral import (
    SpectralValue,
    fourier_envelope,
    integrate_spectrum,
    oscillation_span,
    profile,
    profile_dx2,
    profile_gram,
    spectral_panel,
    spectral_start,
)

__all__ = [
    "ExtensionValue",
    "harmonic_extension",
    "alpha_harmonic_extension",
    "grad_harmonic_extension",
    "extension_l2_norm",
    "extension_transform",
    "extension_transform_dx2",
    "DivergenceError",
]

PI = math.pi


class DivergenceError(ArithmeticError):
    """The requested quantity is infinite for the given data."""


@dataclass(frozen=True)
class ExtensionValue:
    value: float
    quadrature_error: float

    def __float__(self):
        return self.value


def _as_point(x) -> InteriorPoint:
    if isinstance(x, InteriorPoint):
        return x
    x1, x2 = x
    return InteriorPoint(float(x1), float(x2))


def _quad(fun, a, b, points, tol):
    pts = sorted(p for p in set(points) if a < p < b)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            v, e = integrate.quad(fun, a, b, points=pts or None, epsabs=tol, epsrel=tol,
                                  limit=max(200, 4 * len(pts)))
        except integrate.IntegrationWarning as exc:
            v, e = integrate.quad(fun, a, b, points=pts or None, epsabs=tol, epsrel=tol,
                                  limit=max(200, 4 * len(pts)))
            raise QuadratureError(f"boundary quadrature failed: {exc}", v, e) from None
    return v, e


def _side_points(f: BoundaryFunction, x: InteriorPoint, side: BoundarySide):
    # kernel peak sits above x1 with width equal to the distance to the line
    dist = x.x2 if side is BoundarySide.LOWER else PI - x.x2
    pts = list(f.breakpoints) + [x.x1 + c * dist for c in (-4.0, -1.0, 0.0, 1.0, 4.0)]
    if not isinstance(f, Constant):
        lo, hi = f.support
        pts += list(np.linspace(lo, hi, 9))
    return pts


def _convolve_side(kernel, f: BoundaryFunction, x: InteriorPoint, side: BoundarySide, tol):
    lo, hi = f.support
    if not hi > lo:
        return 0.0, 0.0
    return _quad(lambda s: float(kernel(s) * f(s)), lo, hi, _side_points(f, x, side), tol)


def harmonic_extension(phi: BoundaryData, x, tol: float = 1e-9) -> ExtensionValue:
    """``H phi(x)``: expected boundary value at the exit point from ``x``.

    Constant sides use the exact hitting probabilities ``1 - x2/pi`` and
    ``x2/pi``; other sides are integrated against the Poisson kernel.
    """
    x = _as_point(x)
    total, err = 0.0, 0.0
    for side in BoundarySide:
        f = phi.side(side)
        if isinstance(f, Constant):
            total += f.value * exit_probability(x.x2, side)
            continue
        v, e = _convolve_side(lambda s: poisson_kernel(x.x1, x.x2, s, side), f, x, side, tol)
        total += v
        err += e
    return ExtensionValue(total, err)


def grad_harmonic_extension(phi: BoundaryData, x, tol: float = 1e-9) -> Tuple[float, float]:
    """``(d/dx1, d/dx2)`` of ``H phi`` at ``x`` by differentiating under the integral."""
    x = _as_point(x)
    g1, g2 = 0.0, 0.0
    for side in BoundarySide:
        f = phi.side(side)
        if isinstance(f, Constant):
            g2 += f.value * (-1.0 / PI if side is BoundarySide.LOWER else 1.0 / PI)
            continue
        v1, _ = _convolve_side(lambda s: poisson_kernel_grad(x.x1, x.x2, s, side)[0], f, x, side, tol)
        v2, _ = _convolve_side(lambda s: poisson_kernel_grad(x.x1, x.x2, s, side)[1], f, x, side, tol)
        g1 += v1
        g2 += v2
    return g1, g2


def alpha_harmonic_extension(alpha: float, phi: BoundaryData, x, tol: float = 1e-9) -> ExtensionValue:
    """``E_x[exp(-alpha tau) phi(B_tau)]``.

    Conditioning on the exit time, the exit place along ``x1`` is Gaussian,
    so the value is a time integral of the hitting densities against the
    heat-smoothed data; the registry supplies the smoothing in closed form.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    x = _as_point(x)

    def integrand(t):
        if t <= 0.0:
            return 0.0
        out = 0.0
        for side in BoundarySide:
            f = phi.side(side)
            if isinstance(f, Constant) and f.value == 0.0:
                continue
            out += float(hitting_time_density(t, x.x2, side)) * float(f.heat(t, x.x1))
        return math.exp(-alpha * t) * out

    d = min(x.x2, PI - x.x2)
    t_peak = max(d * d / 3.0, 1e-8)
    edges = [0.0, 0.25 * t_peak, t_peak, 4.0 * t_peak, 16.0 * t_peak, max(32.0 * t_peak, 8.0)]
    scales = [f.feature_scale ** 2 for f in (phi.lower, phi.upper) if not isinstance(f, Constant)]
    edges += [s for s in scales if edges[0] < s < edges[-1]]
    edges = sorted(set(edges))
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(edges[:-1], edges[1:]):
                v, e = integrate.quad(integrand, a, b, epsabs=0.1 * tol, epsrel=tol, limit=200)
                total += v
                err += e
            v, e = integrate.quad(integrand, edges[-1], np.inf, epsabs=0.1 * tol, epsrel=tol, limit=200)
            total += v
            err += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"time quadrature failed: {exc}", total, err) from None
    return ExtensionValue(total, err)


def extension_transform(phi: BoundaryData, w, x2, alpha: float = 0.0):
    """Fourier transform in ``x1`` of ``H^alpha phi(., x2)`` at frequencies ``w``."""
    w = np.asarray(w, dtype=float)
    k = np.sqrt(w * w + 2.0 * alpha)
    out = np.zeros(np.broadcast(w, np.asarray(x2)).shape, dtype=complex)
    if not (isinstance(phi.lower, Constant) and phi.lower.value == 0.0):
        out = out + phi.lower.fourier(w) * profile(k, x2)
    if not (isinstance(phi.upper, Constant) and phi.upper.value == 0.0):
        out = out + phi.upper.fourier(w) * profile(k, PI - np.asarray(x2, dtype=float))
    return out


def extension_transform_dx2(phi: BoundaryData, w, x2, alpha: float = 0.0):
    w = np.asarray(w, dtype=float)
    k = np.sqrt(w * w + 2.0 * alpha)
    out = np.zeros(np.broadcast(w, np.asarray(x2)).shape, dtype=complex)
    if not (isinstance(phi.lower, Constant) and phi.lower.value == 0.0):
        out = out + phi.lower.fourier(w) * profile_dx2(k, x2)
    if not (isinstance(phi.upper, Constant) and phi.upper.value == 0.0):
        out = out - phi.upper.fourier(w) * profile_dx2(k, PI - np.asarray(x2, dtype=float))
    return out


def _l2_data(phi: BoundaryData):
    for f in (phi.lower, phi.upper):
        if isinstance(f, Constant) and f.value != 0.0:
            raise DivergenceError("a nonzero constant side is not square integrable")
    return [f for f in (phi.lower, phi.upper) if not isinstance(f, Constant)]


def extension_l2_norm(phi: BoundaryData, tol: float = 1e-9) -> SpectralValue:
    """``||H phi||^2`` over the strip, bounded by ``pi ||phi||^2``.

    By Plancherel in ``x1`` the norm is ``(1/2pi) int |phi^-|^2 g + |phi^+|^2 g
    + 2 Re(phi^- conj phi^+) c dw`` with ``(g, c)`` the closed-form profile
    Gram entries at ``alpha = 0``.
    """
    funcs = _l2_data(phi)
    if not funcs:
        return SpectralValue(0.0, 0.0, 0.0, 0.0)
    fl, fu = phi.lower, phi.upper

    def density(w):
        same, cross = profile_gram(w, w)
        lo = fl.fourier(w) if not isinstance(fl, Constant) else np.zeros_like(w, dtype=complex)
        up = fu.fourier(w) if not isinstance(fu, Constant) else np.zeros_like(w, dtype=complex)
        val = (np.abs(lo) ** 2 + np.abs(up) ** 2) * same + 2.0 * np.real(lo * np.conj(up)) * cross
        return val / (2.0 * PI)

    def majorant(w):
        same, cross = profile_gram(w, w)
        env = sum(float(fourier_envelope(f, w)) ** 2 for f in funcs)
        return float(env * (same + cross)) / (2.0 * PI)

    return integrate_spectrum(density, majorant, oscillation_span(funcs), spectral_panel(funcs),
                              spectral_start(funcs), tol)
