"""Fourier-side description of (alpha-)harmonic extension into the strip.

Along ``x1`` the extension acts as a multiplier: data ``phi`` on the lower
line produces ``phi^(w) e_k(x2)`` and data on the upper line produces
``phi^(w) e_k(pi - x2)`` where

    e_k(x2) = sinh(k (pi - x2)) / sinh(k pi),   k = sqrt(w^2 + 2 alpha).

Integrals over ``x2`` of products of these profiles have closed forms
(:func:`profile_gram`), which turns every quadratic functional of the
extension into a one-dimensional integral over the frequency ``w``
(:func:`integrate_spectrum`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .boundary import BoundaryFunction, Constant, Gaussian, PiecewiseLinear
from .quadrature import composite_nodes

__all__ = [
    "SpectralValue",
    "profile",
    "profile_dx2",
    "profile_gram",
    "fourier_envelope",
    "oscillation_span",
    "integrate_spectrum",
    "choose_cutoff",
    "spectral_panel",
    "spectral_start",
    "graded_x2_rule",
]

PI = math.pi


@dataclass(frozen=True)
class SpectralValue:
    value: float
    quad_error: float
    tail_bound: float
    cutoff: float


def profile(k, x2):
    """``sinh(k (pi - x2)) / sinh(k pi)`` for ``k >= 0``, overflow-free."""
    k = np.asarray(k, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.exp(-k * x2) * -np.expm1(-2.0 * k * (PI - x2))
        den = -np.expm1(-2.0 * k * PI)
        out = num / den
    return np.where(k * PI < 1e-8, (PI - x2) / PI, out)


def profile_dx2(k, x2):
    """``d/dx2`` of :func:`profile`: ``-k cosh(k (pi - x2)) / sinh(k pi)``."""
    k = np.asarray(k, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.exp(-k * x2) * (1.0 + np.exp(-2.0 * k * (PI - x2)))
        den = -np.expm1(-2.0 * k * PI)
        out = -k * num / den
    return np.where(k * PI < 1e-8, -1.0 / PI, out)


def _x_coth(k):
    # k coth(k pi), equal to 1/pi at k = 0
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = k * (1.0 + np.exp(-2.0 * k * PI)) / -np.expm1(-2.0 * k * PI)
    return np.where(k * PI < 1e-8, 1.0 / PI + k * k * PI / 3.0, out)


def _x_csch(k):
    # k / sinh(k pi), equal to 1/pi at k = 0
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = 2.0 * k * np.exp(-k * PI) / -np.expm1(-2.0 * k * PI)
    return np.where(k * PI < 1e-8, 1.0 / PI - k * k * PI / 6.0, out)


# Taylor coefficients of x coth(x) and x csch(x) in powers of x^2
_COTH_SERIES = (1.0, 1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0, -1.0 / 4725.0, 2.0 / 93555.0)
_CSCH_SERIES = (1.0, -1.0 / 6.0, 7.0 / 360.0, -31.0 / 15120.0, 127.0 / 604800.0, -73.0 / 3421440.0)


def _series_gram(kappa, a):
    # divided differences in k^2 of k coth(k pi) and k csch(k pi)
    z1 = (kappa * PI) ** 2
    z2 = (a * PI) ** 2
    same = np.zeros(np.shape(z1))
    cross = np.zeros(np.shape(z1))
    h = np.ones(np.shape(z1))  # complete homogeneous polynomial h_{n-1}(z1, z2)
    p1, p2 = np.ones(np.shape(z1)), np.ones(np.shape(z1))
    for n in range(1, len(_COTH_SERIES)):
        same = same + _COTH_SERIES[n] * h
        cross = cross - _CSCH_SERIES[n] * h
        p1, p2 = p1 * z1, p2 * z2
        h = z1 * h + p2
    return PI * same, PI * cross


def profile_gram(kappa, a):
    """Closed-form ``x2`` integrals of products of extension profiles.

    Returns ``(same, cross)`` with ``same = int_0^pi e_kappa e_a`` and
    ``cross = int_0^pi e_kappa(x) e_a(pi - x) dx``. Green's identity gives
    ``(kappa^2 - a^2) same = kappa coth(kappa pi) - a coth(a pi)`` and
    ``(kappa^2 - a^2) cross = a csch(a pi) - kappa csch(kappa pi)``; both are
    evaluated in a form that stays accurate as ``kappa -> a``.
    """
    kappa = np.asarray(kappa, dtype=float)
    a = np.asarray(a, dtype=float)
    kappa, a = np.broadcast_arrays(kappa, a)
    big = np.maximum(kappa, a)
    lo = np.minimum(kappa, a)
    small = big * PI < 0.1
    K = np.where(small, 1.0, big)
    A = np.where(small, 0.5, lo)
    d = K - A
    dK = -np.expm1(-2.0 * K * PI)
    coth = (1.0 + np.exp(-2.0 * K * PI)) / dK
    csch = 2.0 * np.exp(-K * PI) / dK
    with np.errstate(invalid="ignore", divide="ignore"):
        q2 = np.where(d > 0, -np.expm1(-2.0 * PI * d) / np.where(d > 0, d, 1.0), 2.0 * PI)
        q1 = np.where(d > 0, -np.expm1(-PI * d) / np.where(d > 0, d, 1.0), PI)
    xa = _x_csch(A)
    same = (coth - xa * np.exp(-A * PI) * q2 / dK) / (K + A)
    cross = (xa * (1.0 + np.exp(-(K + A) * PI)) * q1 / dK - csch) / (K + A)
    if np.any(small):
        s0, c0 = _series_gram(kappa, a)
        same = np.where(small, s0, same)
        cross = np.where(small, c0, cross)
    return same, cross


def fourier_envelope(f: BoundaryFunction, w):
    """Upper bound for ``|f^(w)|`` that decays monotonically in ``|w|``."""
    w = np.abs(np.asarray(w, dtype=float))
    if isinstance(f, Constant):
        if f.value != 0.0:
            raise ValueError("nonzero constants have no Fourier transform")
        return np.zeros_like(w)
    if isinstance(f, Gaussian):
        return np.abs(f.fourier(w))
    if isinstance(f, PiecewiseLinear):
        jumps = float(np.sum(np.abs(f._step_s)))
        kinks = float(np.sum(np.abs(f._ramp_s)))
        lo, hi = f.support
        l1 = math.sqrt((hi - lo) * f.l2sq)
        with np.errstate(divide="ignore"):
            env = jumps / w + kinks / (w * w)
        return np.minimum(env, l1)
    raise TypeError(f"no Fourier envelope for {type(f).__name__}")


def oscillation_span(funcs: Sequence[BoundaryFunction]) -> float:
    """Largest distance between features of the given functions.

    Products of their transforms oscillate in ``w`` with at most this period.
    """
    lo, hi = math.inf, -math.inf
    for f in funcs:
        if isinstance(f, Constant):
            continue
        if isinstance(f, Gaussian):
            a = b = f.center
        else:
            a, b = f.support
        lo, hi = min(lo, a), max(hi, b)
    return max(hi - lo, 0.0) if hi >= lo else 0.0


def spectral_panel(funcs: Sequence[BoundaryFunction]) -> float:
    """Panel width in ``w`` that resolves the transforms of ``funcs``.

    A Gaussian of width ``s`` has a transform varying on the scale ``2/s``;
    piecewise-linear transforms oscillate with the span handled separately.
    """
    h = 1.0
    for f in funcs:
        if isinstance(f, Gaussian):
            h = min(h, 2.0 / f.width)
    return h


def spectral_start(funcs: Sequence[BoundaryFunction]) -> float:
    feats = [f.feature_scale for f in funcs if not isinstance(f, Constant)]
    return 8.0 / min(feats + [1.0])


def integrate_spectrum(density: Callable[[np.ndarray], np.ndarray],
                       majorant: Callable[[float], float],
                       span: float, panel: float = 1.0, start: float = 8.0,
                       tol: float = 1e-9, max_cutoff: float = 2.0e5, order: int = 20,
                       chunk: int = 4096) -> SpectralValue:
    """``2 * int_0^inf density(w) dw`` for an even integrand.

    The cutoff ``W`` starts at ``start`` and doubles until
    ``2 * int_W^inf majorant <= tol`` or it reaches ``max_cutoff``; the
    remaining tail is reported, not added. Panels have width
    ``min(pi / span, panel)`` so oscillations of period ``2 pi / span`` are
    resolved; the quadrature error is the difference between ``order`` and
    ``order // 2`` point rules on the same panels.
    """
    cut = choose_cutoff(majorant, start, tol, max_cutoff)
    t = _tail(majorant, cut)
    h = min(PI / span, panel) if span > 0 else panel
    n_panels = max(1, int(math.ceil(cut / h)))
    edges = np.linspace(0.0, cut, n_panels + 1)
    value = 0.0
    coarse = 0.0
    # chunk panels so the transforms never form very large arrays
    step = max(1, int(chunk))
    for first in range(0, n_panels, step):
        sub = edges[first:min(first + step, n_panels) + 1]
        x, w, _ = composite_nodes(sub, order)
        value += float(np.dot(w, density(x)))
        xc, wc, _ = composite_nodes(sub, order // 2)
        coarse += float(np.dot(wc, density(xc)))
    return SpectralValue(2.0 * value, 2.0 * abs(value - coarse), t, cut)


def _tail(majorant, cut):
    with warnings.catch_warnings():
        # the majorants decay fast; quad's convergence heuristics misfire on them
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v, _ = integrate.quad(majorant, cut, np.inf, limit=400)
    return 2.0 * v


def choose_cutoff(majorant, start: float, tol: float, max_cutoff: float) -> float:
    """Smallest ``start * 2^j`` (capped) whose majorant tail is below ``tol``."""
    cut = min(start, max_cutoff)
    while _tail(majorant, cut) > tol and cut < max_cutoff:
        cut = min(2.0 * cut, max_cutoff)
    return cut


def graded_x2_rule(finest: float, order: int = 12, ratio: float = 2.0):
    """Gauss-Legendre rule on (0, pi) with panels graded geometrically toward both ends.

    The smallest panels have length ``finest``; the rule resolves boundary
    layers ``exp(-k x2)`` for ``k`` up to about ``1 / finest``.
    """
    half = PI / 2.0
    edges = [0.0]
    e = finest
    while e < half:
        edges.append(e)
        e *= ratio
    edges.append(half)
    edges = np.asarray(edges)
    x, w, _ = composite_nodes(edges, order)
    nodes = np.concatenate([x, PI - x[::-1]])
    weights = np.concatenate([w, w[::-1]])
    return nodes, weights
