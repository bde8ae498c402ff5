"""Closed-form and series kernels of Brownian motion on the strip R x (0, pi).

All kernels live in canonical strip coordinates: the lower boundary line is
``x2 = 0`` and the upper one ``x2 = pi``. Strips of height ``pi * ell`` are
reached only through the explicit ``ell`` scalings in :func:`scaled_jump_kernels`.

Every function is pure and vectorised over numpy broadcasting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "DIAGONAL",
    "BoundarySide",
    "BoundaryPoint",
    "InteriorPoint",
    "StripGeometry",
    "SeriesTruncation",
    "QuadratureError",
    "poisson_kernel",
    "poisson_kernel_grad",
    "poisson_normal_derivative",
    "gaussian_transition",
    "killed_heat_kernel",
    "killed_heat_kernel_spectral",
    "killed_heat_kernel_images",
    "hitting_time_density",
    "hitting_time_density_spectral",
    "hitting_time_density_images",
    "alpha_poisson_kernel",
    "feller_density",
    "scaled_jump_kernels",
    "exit_probability",
    "integrated_hitting_density",
]

#: Value returned by kernels that are infinite on the diagonal of the same
#: boundary line. It is assigned explicitly, never produced by overflow.
DIAGONAL = math.inf


class QuadratureError(RuntimeError):
    """An adaptive quadrature did not reach its tolerance."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


class BoundarySide(enum.IntEnum):
    LOWER = 0
    UPPER = 1

    @classmethod
    def parse(cls, side) -> "BoundarySide":
        if isinstance(side, BoundarySide):
            return side
        if isinstance(side, str):
            key = side.strip().lower()
            if key in ("lower", "-", "0", "minus"):
                return cls.LOWER
            if key in ("upper", "+", "pi", "plus"):
                return cls.UPPER
            raise ValueError(f"unknown boundary side {side!r}")
        return cls(int(side))

    @property
    def height(self) -> float:
        return 0.0 if self is BoundarySide.LOWER else math.pi

    def other(self) -> "BoundarySide":
        return BoundarySide(1 - int(self))


@dataclass(frozen=True)
class BoundaryPoint:
    x1: float
    side: BoundarySide

    def __post_init__(self):
        if not math.isfinite(self.x1):
            raise ValueError("boundary point must have a finite x1")
        object.__setattr__(self, "side", BoundarySide.parse(self.side))


@dataclass(frozen=True)
class InteriorPoint:
    x1: float
    x2: float

    def __post_init__(self):
        if not math.isfinite(self.x1):
            raise ValueError("interior point must have a finite x1")
        if not 0.0 < self.x2 < math.pi:
            raise ValueError(f"x2={self.x2!r} is not in the open interval (0, pi)")


@dataclass(frozen=True)
class StripGeometry:
    """Strip R x (-pi*ell/2, pi*ell/2); ``ell = 1`` is the canonical strip."""

    ell: float = 1.0

    def __post_init__(self):
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise ValueError(f"width scale must be positive and finite, got {self.ell!r}")

    @property
    def height(self) -> float:
        return math.pi * self.ell


@dataclass(frozen=True)
class SeriesTruncation:
    """Truncation policy for the spectral and image series.

    ``n_max`` and ``k_max`` are minimum term counts; the evaluators extend
    them whenever the analytic tail bound would exceed ``tail_tol``.
    """

    n_max: int = 64
    k_max: int = 8
    t_switch: float = 0.5
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.n_max < 1 or self.k_max < 1:
            raise ValueError("n_max and k_max must be positive")
        if not (self.t_switch > 0 and self.tail_tol > 0):
            raise ValueError("t_switch and tail_tol must be positive")


DEFAULT_TRUNCATION = SeriesTruncation()


def _check_interior(x2) -> np.ndarray:
    x2 = np.asarray(x2, dtype=float)
    if np.any(~((x2 > 0.0) & (x2 < math.pi))):
        raise ValueError("x2 must lie in the open interval (0, pi)")
    return x2


def _side_sign(side) -> float:
    return 1.0 if BoundarySide.parse(side) is BoundarySide.LOWER else -1.0


# --------------------------------------------------------------------------
# Poisson kernel


def _poisson_denominator(u, x2, sign):
    # cosh(u) -/+ cos(x2) written without cancellation near u = 0, x2 = 0.
    if sign > 0:
        return 2.0 * np.sinh(0.5 * u) ** 2 + 2.0 * np.sin(0.5 * x2) ** 2
    return 2.0 * np.sinh(0.5 * u) ** 2 + 2.0 * np.cos(0.5 * x2) ** 2


def poisson_kernel(x1, x2, xi1, side):
    """Density of the exit place of Brownian motion started at ``(x1, x2)``.

    Returns ``sin x2 / (2 pi (cosh(x1 - xi1) -+ cos x2))`` with ``-`` for the
    lower line and ``+`` for the upper line.
    """
    x2 = _check_interior(x2)
    u = np.asarray(x1, dtype=float) - np.asarray(xi1, dtype=float)
    with np.errstate(over="ignore"):
        den = _poisson_denominator(u, x2, _side_sign(side))
        return np.sin(x2) / (2.0 * math.pi * den)


def _poisson_d2(u, x2, sign):
    # d/dx2 of sin x2 / (2 pi (cosh u - sign cos x2)); valid up to the boundary
    den = _poisson_denominator(u, x2, sign)
    return (np.cos(x2) * np.cosh(u) - sign) / (2.0 * math.pi * den**2)


def poisson_kernel_grad(x1, x2, xi1, side):
    """Gradient ``(d/dx1, d/dx2)`` of :func:`poisson_kernel` in the interior point."""
    x2 = _check_interior(x2)
    sign = _side_sign(side)
    u = np.asarray(x1, dtype=float) - np.asarray(xi1, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        den = _poisson_denominator(u, x2, sign)
        d1 = -np.sin(x2) * np.sinh(u) / (2.0 * math.pi * den**2)
        d2 = _poisson_d2(u, x2, sign)
    d1 = np.where(np.isfinite(d1), d1, 0.0)
    d2 = np.where(np.isfinite(d2), d2, 0.0)
    return d1, d2


def poisson_normal_derivative(xi1, side, eta1, eta_side):
    """Inward normal derivative at boundary point ``xi`` of ``P(., eta)``.

    Evaluates the x2-derivative of the kernel formula on the boundary line
    itself, independently of :func:`feller_density`.
    """
    side = BoundarySide.parse(side)
    u = np.asarray(xi1, dtype=float) - np.asarray(eta1, dtype=float)
    x2 = side.height
    inward = 1.0 if side is BoundarySide.LOWER else -1.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = inward * _poisson_d2(u, x2, _side_sign(eta_side))
    return out if np.ndim(out) else float(out)


def gaussian_transition(t, x1, xi1):
    """One-dimensional heat kernel ``exp(-(x1 - xi1)^2 / 2t) / sqrt(2 pi t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    d = np.asarray(x1, dtype=float) - np.asarray(xi1, dtype=float)
    return np.exp(-0.5 * d * d / t) / np.sqrt(2.0 * math.pi * t)


# --------------------------------------------------------------------------
# Killed heat kernel and hitting densities on (0, pi)


def _spectral_terms(t_min: float, trunc: SeriesTruncation, weight_power: int) -> int:
    # sum_{n>N} n^p exp(-n^2 t/2) <= integral bound; p = 0 for p0, 1 for h.
    t = t_min
    n = max(trunc.n_max, int(math.ceil(1.0 / math.sqrt(t))) + 1)
    scale = math.sqrt(math.pi / (2.0 * t)) if weight_power == 0 else 1.0 / t
    while scale * math.exp(-0.5 * n * n * t) > trunc.tail_tol * 1e-2:
        n = int(n * 1.25) + 1
    return n


def _image_terms(t_max: float, trunc: SeriesTruncation, weight_power: int) -> int:
    k = trunc.k_max
    while True:
        z = 2.0 * math.pi * k
        g = math.exp(-0.5 * z * z / t_max) / math.sqrt(2.0 * math.pi * t_max)
        bound = 8.0 * g * ((z + 2.0 * math.pi) / t_max if weight_power else 1.0)
        if bound < trunc.tail_tol * 1e-2:
            return k
        k += 2


def killed_heat_kernel_spectral(t, x2, y2, n_terms: int):
    """Sine-series transition density of Brownian motion killed on {0, pi}."""
    t = np.asarray(t, dtype=float)[..., None]
    n = np.arange(1, n_terms + 1, dtype=float)
    x = np.asarray(x2, dtype=float)[..., None]
    y = np.asarray(y2, dtype=float)[..., None]
    terms = np.exp(-0.5 * n * n * t) * np.sin(n * x) * np.sin(n * y)
    return (2.0 / math.pi) * terms.sum(axis=-1)


def killed_heat_kernel_images(t, x2, y2, k_terms: int):
    """Method-of-images form of the killed transition density."""
    t = np.asarray(t, dtype=float)[..., None]
    k = np.arange(-k_terms, k_terms + 1, dtype=float)
    x = np.asarray(x2, dtype=float)[..., None]
    y = np.asarray(y2, dtype=float)[..., None]
    a = x - y + 2.0 * math.pi * k
    b = x + y + 2.0 * math.pi * k
    terms = np.exp(-0.5 * a * a / t) - np.exp(-0.5 * b * b / t)
    return terms.sum(axis=-1) / np.sqrt(2.0 * math.pi * t[..., 0])


def _split_by_time(t, trunc):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return t, t >= trunc.t_switch


def killed_heat_kernel(t, x2, y2, trunc: SeriesTruncation = DEFAULT_TRUNCATION):
    """Transition density ``p0_t(x2, y2)`` of Brownian motion killed at 0 and pi.

    Spectral series for ``t >= trunc.t_switch``, image series below it.
    Points on the boundary return exactly 0.
    """
    t, spectral = _split_by_time(t, trunc)
    x2 = np.asarray(x2, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    t, x2, y2, spectral = np.broadcast_arrays(t, x2, y2, spectral)
    out = np.zeros(t.shape)
    if np.any(spectral):
        n = _spectral_terms(float(t[spectral].min()), trunc, 0)
        out[spectral] = killed_heat_kernel_spectral(t[spectral], x2[spectral], y2[spectral], n)
    small = ~spectral
    if np.any(small):
        k = _image_terms(float(t[small].max()), trunc, 0)
        out[small] = killed_heat_kernel_images(t[small], x2[small], y2[small], k)
    edge = (x2 <= 0) | (x2 >= math.pi) | (y2 <= 0) | (y2 >= math.pi)
    out[edge] = 0.0
    return out if out.ndim else float(out)


def hitting_time_density_spectral(t, x2, side, n_terms: int):
    t = np.asarray(t, dtype=float)[..., None]
    n = np.arange(1, n_terms + 1, dtype=float)
    x = np.asarray(x2, dtype=float)[..., None]
    sign = np.ones_like(n) if BoundarySide.parse(side) is BoundarySide.LOWER else (-1.0) ** (n + 1)
    terms = sign * n * np.exp(-0.5 * n * n * t) * np.sin(n * x)
    return terms.sum(axis=-1) / math.pi


def hitting_time_density_images(t, x2, side, k_terms: int):
    x = np.asarray(x2, dtype=float)
    if BoundarySide.parse(side) is BoundarySide.UPPER:
        x = math.pi - x
    t = np.asarray(t, dtype=float)[..., None]
    k = np.arange(-k_terms, k_terms + 1, dtype=float)
    z = x[..., None] + 2.0 * math.pi * k
    terms = z / t * np.exp(-0.5 * z * z / t)
    return terms.sum(axis=-1) / np.sqrt(2.0 * math.pi * t[..., 0])


def hitting_time_density(t, x2, side, trunc: SeriesTruncation = DEFAULT_TRUNCATION):
    """Density in ``t`` of exiting (0, pi) at time ``t`` through ``side``."""
    t, spectral = _split_by_time(t, trunc)
    x2 = _check_interior(x2)
    t, x2, spectral = np.broadcast_arrays(t, x2, spectral)
    out = np.zeros(t.shape)
    if np.any(spectral):
        n = _spectral_terms(float(t[spectral].min()), trunc, 1)
        out[spectral] = hitting_time_density_spectral(t[spectral], x2[spectral], side, n)
    small = ~spectral
    if np.any(small):
        k = _image_terms(float(t[small].max()), trunc, 1)
        out[small] = hitting_time_density_images(t[small], x2[small], side, k)
    return out if out.ndim else float(out)


def alpha_poisson_kernel(alpha, x1, x2, xi1, side, trunc: SeriesTruncation = DEFAULT_TRUNCATION,
                         rtol: float = 1e-10, atol: float = 1e-14) -> float:
    """Exit-place density discounted by ``exp(-alpha * tau)``.

    Computed as the Laplace transform in time of the product of the
    longitudinal heat kernel and the hitting-time density. Scalar only.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    x2 = float(_check_interior(x2))
    u = float(x1) - float(xi1)

    def integrand(t):
        if t <= 0.0:
            return 0.0
        return math.exp(-alpha * t) * float(gaussian_transition(t, u, 0.0)) * \
            float(hitting_time_density(t, x2, side, trunc))

    total = 0.0
    err = 0.0
    # characteristic time of the Gaussian factors, then the spectral decay
    t_peak = max((u * u + min(x2, math.pi - x2) ** 2) / 3.0, 1e-6)
    edges = [0.0, 0.25 * t_peak, t_peak, 4.0 * t_peak, max(8.0 * t_peak, 4.0)]
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(integrand, a, b, epsabs=atol, epsrel=rtol, limit=200)
        total += v
        err += e
    v, e = integrate.quad(integrand, edges[-1], np.inf, epsabs=atol, epsrel=rtol, limit=200)
    total += v
    err += e
    if err > max(atol * 10, rtol * abs(total) * 10):
        raise QuadratureError("alpha Poisson kernel quadrature did not converge", total, err)
    return total


# --------------------------------------------------------------------------
# Jump kernels


def _inv_cosh_minus_one(u):
    # 1/(cosh u - 1) = 2 e^{-|u|} / (1 - e^{-|u|})^2, finite for u != 0
    a = np.abs(u)
    e = np.exp(-a)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2.0 * e / np.expm1(-a) ** 2


def _inv_cosh_plus_one(u):
    a = np.abs(u)
    e = np.exp(-a)
    return 2.0 * e / (1.0 + e) ** 2


def feller_density(xi1, side, eta1, eta_side):
    """Jump density of the boundary trace between ``(xi1, side)`` and ``(eta1, eta_side)``.

    Same line: ``1 / (4 pi (cosh u - 1))``; opposite lines:
    ``1 / (4 pi (cosh u + 1))`` with ``u = xi1 - eta1``. Coincident points on
    the same line give :data:`DIAGONAL`.
    """
    u = np.asarray(xi1, dtype=float) - np.asarray(eta1, dtype=float)
    if BoundarySide.parse(side) == BoundarySide.parse(eta_side):
        out = np.where(u == 0.0, DIAGONAL, _inv_cosh_minus_one(np.where(u == 0.0, 1.0, u)))
    else:
        out = _inv_cosh_plus_one(u)
    out = out / (4.0 * math.pi)
    return out if np.ndim(out) else float(out)


def scaled_jump_kernels(ell, u):
    """Cross-line and same-line jump kernels of the strip of height ``pi * ell``.

    Returns ``(k1, k2)`` with ``k1 = 1/(2 ell^2 (cosh(u/ell) + 1))`` and
    ``k2 = 1/(ell^2 (cosh(u/ell) - 1))``; ``k2`` is :data:`DIAGONAL` at 0.
    """
    ell = StripGeometry(float(ell)).ell
    v = np.asarray(u, dtype=float) / ell
    k1 = _inv_cosh_plus_one(v) / (2.0 * ell * ell)
    k2 = np.where(v == 0.0, DIAGONAL, _inv_cosh_minus_one(np.where(v == 0.0, 1.0, v)) / (ell * ell))
    if np.ndim(k1) == 0:
        return float(k1), float(k2)
    return k1, k2


def exit_probability(x2, side) -> float:
    """Probability of leaving (0, pi) through ``side`` when started at ``x2``."""
    x2 = float(_check_interior(x2))
    return 1.0 - x2 / math.pi if BoundarySide.parse(side) is BoundarySide.LOWER else x2 / math.pi


def integrated_hitting_density(t, x2, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> float:
    """``P(tau <= t)`` for the exit time of (0, pi) from ``x2``."""
    if t <= 0:
        return 0.0
    x2 = float(_check_interior(x2))
    # P(tau > t) = int p0_t(x2, y) dy = (4/pi) sum_{n odd} exp(-n^2 t/2) sin(n x2)/n
    if t >= trunc.t_switch:
        n = np.arange(1, 2 * _spectral_terms(t, trunc, 0) + 2, 2, dtype=float)
        survive = (4.0 / math.pi) * np.sum(np.exp(-0.5 * n * n * t) * np.sin(n * x2) / n)
        return float(1.0 - survive)
    k_terms = _image_terms(t, trunc, 0)
    k = np.arange(-k_terms, k_terms + 1, dtype=float)
    s_ = math.sqrt(t)
    z = x2 + 2.0 * math.pi * k
    cdf = special.ndtr
    survive = np.sum(2.0 * cdf(z / s_) - cdf((z - math.pi) / s_) - cdf((z + math.pi) / s_))
    return float(1.0 - survive)
