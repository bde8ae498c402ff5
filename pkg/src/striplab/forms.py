"""Quadratic forms on boundary data: trace energy, image forms and their limits.

Every double integral over pairs of boundary points is reduced to a single
integral over the displacement ``u = x - x'``:

* same line, ``int int (f(x) - f(x'))^2 k(x - x')  = 2 int_0^inf k(u) D(u) du``
  with ``D(u) = int (f(x + u) - f(x))^2 dx``;
* opposite lines, ``int int (f(x) - g(x'))^2 k(x - x') =
  (|f|^2 + |g|^2) int k - 2 int k(u) C(u) du`` with ``C(u) = int f(x + u) g(x) dx``.

``D(u) = O(u^2)`` cancels the ``2/u^2`` singularity of the same-line kernels.
Near ``u = 0`` the integral is summed over dyadic panels; if successive
panel contributions stop halving, the form is infinite for that data and the
report is flagged as diverged.

The interior energy and the Feller functional are evaluated on the other
side of the identity, as integrals over the strip, using the Fourier
multipliers of :mod:`striplab.spectral` in ``x1`` and a graded Gauss rule in
``x2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Sequence

import numpy as np

from .boundary import (
    BoundaryData,
    BoundaryFunction,
    Constant,
    Gaussian,
    PiecewiseLinear,
    correlation,
    sqdiff_shift,
)
from .harmonic import (
    DivergenceError,
    extension_transform,
    extension_transform_dx2,
)
from .kernels import StripGeometry, _inv_cosh_minus_one, _inv_cosh_plus_one
from .quadrature import composite_nodes
from .spectral import (
    choose_cutoff,
    fourier_envelope,
    graded_x2_rule,
    integrate_spectrum,
    oscillation_span,
    profile_gram,
    spectral_panel,
    spectral_start,
)

__all__ = [
    "QuadratureSpec",
    "EnergyReport",
    "JumpKernel",
    "cross_kernel",
    "same_kernel",
    "cauchy_kernel",
    "feller_kernel",
    "same_side_integral",
    "cross_side_integral",
    "trace_energy",
    "interior_energy",
    "form_A1",
    "form_A2",
    "form_A",
    "form_A0",
    "form_Ainf",
    "form_value",
    "gagliardo_seminorm",
    "feller_functional",
    "feller_limit",
    "FellerLimit",
    "closed_feller_functional",
    "beurling_deny_consistency",
    "norm_equivalence_report",
    "FORM_KINDS",
]

PI = math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature controls shared by the form evaluators.

    Attributes
    ----------
    window : float, optional
        Explicit panels cover ``|u| <= window``; beyond it the kernel tail is
        integrated analytically against the limiting value of ``D``. ``None``
        uses the support span of the data, where the tail formula is exact.
    order : int
        Gauss-Legendre points per panel.
    diag_split : float, optional
        Start of the dyadic near-diagonal zone; ``None`` picks half the
        smallest feature or kernel scale.
    diag_levels : int
        Number of dyadic halvings below ``diag_split``.
    divergence_ratio : float
        Ratio of successive dyadic contributions above which a form is
        declared divergent (smooth data give 1/2, jumps give 1).
    alpha_schedule : tuple of float
        Values of ``alpha`` used to extrapolate the Feller functional.
    tol : float
        Absolute tolerance for the spectral integrals.
    max_cutoff : float
        Largest frequency of the spectral integrals; any remaining tail is
        reported in ``tail_bound``.
    """

    window: Optional[float] = None
    order: int = 20
    diag_split: Optional[float] = None
    diag_levels: int = 30
    divergence_ratio: float = 0.8
    alpha_schedule: tuple = (1e2, 1e3, 1e4)
    tol: float = 1e-9
    max_cutoff: float = 2e3

    def __post_init__(self):
        if self.window is not None and not self.window > 0:
            raise ValueError("window must be positive")
        if self.diag_split is not None:
            if not self.diag_split > 0:
                raise ValueError("diag_split must be positive")
            if self.window is not None and not self.diag_split < self.window:
                raise ValueError("diag_split must be smaller than the window")
        if self.order < 2 or self.diag_levels < 2:
            raise ValueError("order and diag_levels must be at least 2")
        if any(a <= 0 for a in self.alpha_schedule):
            raise ValueError("alpha schedule must be positive")
        object.__setattr__(self, "alpha_schedule", tuple(sorted(float(a) for a in self.alpha_schedule)))


DEFAULT_SPEC = QuadratureSpec()


@dataclass
class EnergyReport:
    value: float
    quad_error: float = 0.0
    tail_bound: float = 0.0
    breakdown: Dict[str, float] = field(default_factory=dict)
    diverged: bool = False
    label: str = ""

    def to_dict(self) -> dict:
        def num(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
        return {
            "label": self.label,
            "value": num(self.value),
            "quad_error": num(self.quad_error),
            "tail_bound": num(self.tail_bound),
            "breakdown": {k: num(v) for k, v in self.breakdown.items()},
            "diverged": self.diverged,
        }

    def scaled(self, c: float, label: str | None = None) -> "EnergyReport":
        return EnergyReport(c * self.value, abs(c) * self.quad_error, abs(c) * self.tail_bound,
                            {k: c * v for k, v in self.breakdown.items()}, self.diverged,
                            label if label is not None else self.label)

    @staticmethod
    def combine(parts: Dict[str, "EnergyReport"], label: str = "") -> "EnergyReport":
        diverged = any(p.diverged for p in parts.values())
        value = math.inf if diverged else math.fsum(p.value for p in parts.values())
        return EnergyReport(value,
                            math.fsum(p.quad_error for p in parts.values()),
                            math.fsum(p.tail_bound for p in parts.values()),
                            {k: p.value for k, p in parts.items()}, diverged, label)


# --------------------------------------------------------------------------
# jump kernels


@dataclass(frozen=True)
class JumpKernel:
    """Even jump kernel ``k(u)`` with an analytic tail ``int_U^inf k``.

    ``singular`` kernels behave like ``c/u^2`` at the origin and are only
    integrated against differences that vanish to second order.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    tail: Callable[[float], float]
    scale: float
    singular: bool
    total: float = math.inf

    def __call__(self, u):
        return self.func(np.asarray(u, dtype=float))


def cross_kernel(ell: float = 1.0, weight: float = 1.0) -> JumpKernel:
    """``weight / (2 ell^2 (cosh(u/ell) + 1))``, integrating to ``weight / ell``."""
    ell = StripGeometry(ell).ell
    return JumpKernel(
        f"k1[ell={ell:g}]",
        lambda u: weight * _inv_cosh_plus_one(u / ell) / (2.0 * ell * ell),
        lambda U: weight * 0.5 / ell * (1.0 - math.tanh(0.5 * U / ell)),
        ell, False, weight / ell)


def same_kernel(ell: float = 1.0, weight: float = 1.0) -> JumpKernel:
    """``weight / (ell^2 (cosh(u/ell) - 1))``."""
    ell = StripGeometry(ell).ell

    def tail(U):
        # (1/ell) (coth(U/2ell) - 1) = (2/ell) e^{-U/ell} / (1 - e^{-U/ell})
        x = U / ell
        return weight * 2.0 / ell * math.exp(-x) / -math.expm1(-x)

    return JumpKernel(f"k2[ell={ell:g}]",
                      lambda u: weight * _inv_cosh_minus_one(u / ell) / (ell * ell),
                      tail, ell, True)


def cauchy_kernel(weight: float = 1.0) -> JumpKernel:
    """``weight / u^2``."""
    return JumpKernel("cauchy", lambda u: weight / (u * u), lambda U: weight / U, math.inf, True)


def feller_kernel(same_side: bool) -> JumpKernel:
    """Jump density of the boundary trace for a same-line or cross-line pair."""
    if same_side:
        return same_kernel(1.0, 1.0 / (4.0 * PI))
    return cross_kernel(1.0, 1.0 / (2.0 * PI))


# --------------------------------------------------------------------------
# one-dimensional reductions


def _feature(f: BoundaryFunction) -> float:
    return f.feature_scale if not isinstance(f, Constant) else math.inf


def _breaks_of(f: BoundaryFunction) -> np.ndarray:
    if isinstance(f, PiecewiseLinear):
        return f.breakpoints
    return np.empty(0)


def _graded_edges(start: float, stop: float, h0: float, extra: Iterable[float] = ()):
    """Panel edges on ``[start, stop]`` with lengths ``<= max(h0, u/2)`` and given breaks."""
    pts = [start]
    u = start
    while u < stop:
        u = min(u + max(h0, 0.5 * u), stop)
        pts.append(u)
    pts.extend(b for b in extra if start < b < stop)
    return np.unique(np.asarray(pts))


@dataclass
class _Partial:
    value: float
    quad_error: float
    tail_bound: float
    diverged: bool


def _dyadic_sum(integrand, top: float, levels: int, order: int, ratio_limit: float):
    """Sum of ``int integrand`` over ``[top 2^-j-1, top 2^-j]``, ``j < levels``.

    Returns the sum including the extrapolated remainder below the last
    panel, the size of that remainder and the divergence flag from the ratio
    of the last contributions.
    """
    edges = top * 2.0 ** -np.arange(levels + 1)[::-1]
    x, w, panel = composite_nodes(edges, order)
    vals = integrand(x) * w
    contrib = np.bincount(panel, weights=vals, minlength=levels)[::-1]  # largest panel first
    total = math.fsum(contrib)
    last, prev = contrib[-1], contrib[-2]
    ratios = contrib[-6:][1:] / np.where(contrib[-6:][:-1] != 0, contrib[-6:][:-1], 1.0)
    if prev == 0.0 and last == 0.0:
        return total, 0.0, False
    r = float(np.median(ratios))
    if r >= ratio_limit:
        return total, math.inf, True
    # geometric remainder below the last panel, added to the sum and reported
    rem = last * r / (1.0 - r) if 0 < r < 1 else last
    return total + rem, abs(rem), False


def _gl_error(integrand, edges, order):
    x, w, _ = composite_nodes(edges, order)
    xc, wc, _ = composite_nodes(edges, order // 2)
    fine = float(np.dot(w, integrand(x)))
    coarse = float(np.dot(wc, integrand(xc)))
    return fine, abs(fine - coarse)


def _sqdiff_fn(fa: BoundaryFunction, fb: BoundaryFunction):
    if fa is fb and hasattr(fa, "sqdiff"):
        return lambda u: fa.sqdiff(u)
    return np.vectorize(lambda u: sqdiff_shift(fa, fb, float(u)), otypes=[float])


def same_side_integral(f: BoundaryFunction, kernel: JumpKernel,
                       spec: QuadratureSpec = DEFAULT_SPEC) -> _Partial:
    """``int int (f(x) - f(x'))^2 k(x - x') dx dx'``."""
    if isinstance(f, Constant):
        return _Partial(0.0, 0.0, 0.0, False)
    lo, hi = f.support
    span = hi - lo
    window = span if spec.window is None else min(spec.window, span)
    d_inf = 2.0 * f.l2sq
    h0 = 0.5 * min(_feature(f), kernel.scale)
    top = spec.diag_split if spec.diag_split is not None else h0
    top = min(top, 0.5 * window)
    breaks = np.unique(np.abs(np.subtract.outer(_breaks_of(f), _breaks_of(f))).ravel())
    breaks = breaks[breaks > 0]
    if breaks.size:
        top = min(top, float(breaks.min()))
    D = _sqdiff_fn(f, f)

    def integrand(u):
        return kernel(u) * D(u)

    near, rem, diverged = _dyadic_sum(integrand, top, spec.diag_levels, spec.order, spec.divergence_ratio)
    if diverged:
        return _Partial(math.inf, 0.0, math.inf, True)
    edges = _graded_edges(top, window, h0, breaks)
    mid, err = _gl_error(integrand, edges, spec.order)
    # beyond the window D <= d_inf, with equality beyond the support span
    far = d_inf * kernel.tail(window)
    trunc = 0.0 if window >= span else far
    value = 2.0 * (near + mid + far)
    return _Partial(value, 2.0 * err, 2.0 * (rem + trunc), False)


def _correlation_fn(fa, fb):
    if isinstance(fa, Gaussian) and isinstance(fb, Gaussian):
        a, b = fa.width ** 2, fb.width ** 2
        c = fa.amplitude * fb.amplitude * math.sqrt(PI * a * b / (a + b))
        return lambda u: c * np.exp(-(fa.center - u - fb.center) ** 2 / (a + b))
    return np.vectorize(lambda u: correlation(fa, fb, float(u)), otypes=[float])


def _corr_support(fa, fb):
    la, ha = fa.support
    lb, hb = fb.support
    return la - hb, ha - lb


def _kernel_corr_integral(fa, fb, kernel: JumpKernel, spec: QuadratureSpec, order=None):
    """``int k(u) C(u) du`` over the support of the correlation ``C``."""
    order = order or spec.order
    lo, hi = _corr_support(fa, fb)
    if not hi > lo:
        return 0.0, 0.0
    breaks = np.subtract.outer(_breaks_of(fa), _breaks_of(fb)).ravel()
    h0 = 0.5 * min(_feature(fa), _feature(fb), 2.0 * kernel.scale)
    pts = [lo, hi, 0.0] + list(breaks)
    if math.isfinite(kernel.scale):
        pts += [s * kernel.scale * 2.0 ** j for s in (-1, 1) for j in range(-3, 6)]
    pts = np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
    edges = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((b - a) / h0)))
        edges.append(np.linspace(a, b, n + 1)[1:])
    edges = np.concatenate(edges)
    C = _correlation_fn(fa, fb)
    return _gl_error(lambda u: kernel(u) * C(u), edges, order)


def cross_side_integral(fa: BoundaryFunction, fb: BoundaryFunction, kernel: JumpKernel,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> _Partial:
    """``int int (fa(x) - fb(x'))^2 k(x - x') dx dx'`` for an integrable kernel."""
    if kernel.singular:
        raise ValueError("cross-line integrals need an integrable kernel")
    ca, cb = isinstance(fa, Constant), isinstance(fb, Constant)
    if ca and cb:
        return _Partial(0.0 if fa.value == fb.value else math.inf, 0.0, 0.0, fa.value != fb.value)
    if (ca and fa.value != 0.0) or (cb and fb.value != 0.0):
        return _Partial(math.inf, 0.0, 0.0, True)
    mass = (0.0 if ca else fa.l2sq) + (0.0 if cb else fb.l2sq)
    if ca or cb:
        return _Partial(mass * kernel.total, 0.0, 0.0, False)
    v, e = _kernel_corr_integral(fa, fb, kernel, spec)
    return _Partial(mass * kernel.total - 2.0 * v, 2.0 * e, 0.0, False)


def _report(p: _Partial, label="") -> EnergyReport:
    return EnergyReport(p.value, p.quad_error, p.tail_bound, {}, p.diverged, label)


def _same_pair(f: BoundaryData, kernel, spec):
    return {
        "same-side-lower": _report(same_side_integral(f.lower, kernel, spec)),
        "same-side-upper": _report(same_side_integral(f.upper, kernel, spec)),
    }


# --------------------------------------------------------------------------
# public forms


def form_A1(ell: float, f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """Cross-line image form with kernel ``k1`` of the strip of height ``pi ell``."""
    part = _report(cross_side_integral(f.lower, f.upper, cross_kernel(ell), spec))
    return EnergyReport.combine({"cross-side": part}, f"A1[ell={ell:g}]")


def form_A2(ell: float, f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """Same-line image form with kernel ``k2`` of the strip of height ``pi ell``."""
    return EnergyReport.combine(_same_pair(f, same_kernel(ell), spec), f"A2[ell={ell:g}]")


def form_A(ell: float, f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """``A1 / (2 pi) + A2 / (8 pi)``; equals :func:`trace_energy` at ``ell = 1``."""
    a1 = form_A1(ell, f, spec).scaled(1.0 / (2.0 * PI))
    a2 = form_A2(ell, f, spec)
    parts = {"cross-side": EnergyReport(a1.value, a1.quad_error, a1.tail_bound, {}, a1.diverged)}
    for k, v in a2.breakdown.items():
        parts[k] = EnergyReport(v / (8.0 * PI), 0.0, 0.0, {}, not math.isfinite(v))
    out = EnergyReport.combine(parts, f"A[ell={ell:g}]")
    out.quad_error += a2.quad_error / (8.0 * PI)
    out.tail_bound += a2.tail_bound / (8.0 * PI)
    return out


def trace_energy(f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """Energy of the boundary trace process.

    Cross-line weight ``1/(4 pi (cosh u + 1))``, same-line weight
    ``1/(8 pi (cosh u - 1))``.
    """
    if f.is_constant and f.lower.value == f.upper.value:
        zero = EnergyReport(0.0)
        return EnergyReport.combine({"cross-side": zero, "same-side-lower": zero,
                                     "same-side-upper": zero}, "trace")
    parts = {"cross-side": _report(cross_side_integral(f.lower, f.upper,
                                                         cross_kernel(1.0, 1.0 / (2.0 * PI)), spec))}
    parts.update(_same_pair(f, same_kernel(1.0, 1.0 / (8.0 * PI)), spec))
    return EnergyReport.combine(parts, "trace")


def form_A0(f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """``(1/2pi) int (f+ - f-)^2``."""
    v = sqdiff_shift(f.upper, f.lower, 0.0)
    part = EnergyReport(v / (2.0 * PI), 0.0, 0.0, {}, not math.isfinite(v))
    return EnergyReport.combine({"cross-side": part}, "A0")


def gagliardo_seminorm(g: BoundaryFunction, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """``int int (g(x) - g(x'))^2 / (x - x')^2 dx dx'``."""
    return _report(same_side_integral(g, cauchy_kernel(), spec), "gagliardo")


def form_Ainf(f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC, scaled: bool = True) -> EnergyReport:
    """Limit of the same-line image form: two independent Cauchy-type energies.

    With ``scaled`` the value is ``(1/8pi) * 2 * sum`` of the Gagliardo
    seminorms of the two sides, otherwise the unweighted ``2 * sum``.
    """
    w = 2.0 / (8.0 * PI) if scaled else 2.0
    return EnergyReport.combine(_same_pair(f, cauchy_kernel(w), spec), "Ainf" if scaled else "Ainf2")


FORM_KINDS = ("A0", "A1", "A2", "A", "Ainf", "trace")


def form_value(kind: str, f: BoundaryData, ell: float = 1.0,
               spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """Dispatch on a form name, as used by the command line."""
    kind = {"traceT": "trace", "trace_energy": "trace"}.get(kind, kind)
    if kind == "A0":
        return form_A0(f, spec)
    if kind == "A1":
        return form_A1(ell, f, spec)
    if kind == "A2":
        return form_A2(ell, f, spec)
    if kind == "A":
        return form_A(ell, f, spec)
    if kind == "Ainf":
        return form_Ainf(f, spec)
    if kind == "interior":
        return interior_energy(f, spec)
    if kind == "trace":
        return trace_energy(f, spec)
    raise ValueError(f"unknown form {kind!r}; expected one of {FORM_KINDS + ('interior',)}")


# --------------------------------------------------------------------------
# strip integrals on the Fourier side


def _nonconstant(phi: BoundaryData):
    return [f for f in (phi.lower, phi.upper) if not isinstance(f, Constant)]


def interior_energy(phi: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """``(1/2) int_strip |grad H phi|^2``.

    Plancherel in ``x1`` turns the strip integral into
    ``(1/4pi) int dw int_0^pi (w^2 |u^|^2 + |d2 u^|^2) dx2`` with ``u^`` the
    transform of the extension; the ``x2`` integral uses a graded Gauss rule
    and the ``w`` integral :func:`striplab.spectral.integrate_spectrum`.
    """
    for f in (phi.lower, phi.upper):
        if isinstance(f, Constant) and f.value != 0.0:
            if phi.is_constant and phi.lower.value == phi.upper.value:
                return EnergyReport(0.0, label="interior")
            # a nonconstant profile in x2 over the whole line
            return EnergyReport(math.inf, diverged=True, label="interior")
    funcs = _nonconstant(phi)
    if not funcs:
        return EnergyReport(0.0, label="interior")

    def majorant(w):
        env = sum(float(fourier_envelope(f, w)) ** 2 for f in funcs)
        # w coth(w pi) + w csch(w pi) bounds the Dirichlet-to-Neumann symbol
        return env * w * (1.0 / math.tanh(min(w * PI, 700.0)) + 1.0) / (4.0 * PI)

    # find the cutoff first so the x2 rule can resolve the steepest profile
    cut = choose_cutoff(majorant, spectral_start(funcs), spec.tol, spec.max_cutoff)
    nodes, weights = graded_x2_rule(1.0 / (40.0 * max(cut, 1.0)))

    def density(w):
        w = np.asarray(w)[:, None]
        u = extension_transform(phi, w, nodes)
        du = extension_transform_dx2(phi, w, nodes)
        g = (w * w) * np.abs(u) ** 2 + np.abs(du) ** 2
        return (g @ weights) / (4.0 * PI)

    res = integrate_spectrum(density, majorant, oscillation_span(funcs), spectral_panel(funcs),
                             cut, spec.tol, max_cutoff=cut, chunk=64)
    diverged = res.tail_bound > max(1e3 * spec.tol, 1e-3 * abs(res.value)) and _has_jump(funcs)
    return EnergyReport(math.inf if diverged else res.value, res.quad_error, res.tail_bound,
                        {"interior": res.value}, diverged, "interior")


def _has_jump(funcs) -> bool:
    return any(not f.h_half for f in funcs)


def feller_functional(alpha: float, phi: BoundaryData, psi: BoundaryData,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """``alpha int_strip H^alpha phi(x) H psi(x) dx``.

    Same tensor rule as :func:`interior_energy`: the Fourier transforms in
    ``x1`` of the two extensions are paired over a graded ``x2`` rule.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    for f in (phi.lower, phi.upper, psi.lower, psi.upper):
        if isinstance(f, Constant) and f.value != 0.0:
            raise DivergenceError("the Feller functional needs square-integrable data")
    fp, fq = _nonconstant(phi), _nonconstant(psi)
    if not fp or not fq:
        return EnergyReport(0.0, label=f"U_alpha[{alpha:g}]")
    funcs = fp + fq

    pairs = [(fa, fb, fa_side == fb_side)
             for fa_side, fa in (("lower", phi.lower), ("upper", phi.upper)) if not isinstance(fa, Constant)
             for fb_side, fb in (("lower", psi.lower), ("upper", psi.upper)) if not isinstance(fb, Constant)]

    def majorant(w):
        k = math.sqrt(w * w + 2.0 * alpha)
        same, cross = profile_gram(k, w)
        total = 0.0
        for fa, fb, on_same in pairs:
            g = same if on_same else cross
            total += float(fourier_envelope(fa, w) * fourier_envelope(fb, w) * g)
        return alpha * total / (2.0 * PI)

    cut = choose_cutoff(majorant, spectral_start(funcs), spec.tol, spec.max_cutoff)
    nodes, weights = graded_x2_rule(1.0 / (40.0 * math.sqrt(cut * cut + 2.0 * alpha)))

    def density(w):
        w = np.asarray(w)[:, None]
        u = extension_transform(phi, w, nodes, alpha)
        v = extension_transform(psi, w, nodes, 0.0)
        return alpha * (np.real(u * np.conj(v)) @ weights) / (2.0 * PI)

    res = integrate_spectrum(density, majorant, oscillation_span(funcs), spectral_panel(funcs),
                             cut, spec.tol, max_cutoff=cut, chunk=64)
    return EnergyReport(res.value, res.quad_error, res.tail_bound, {"strip": res.value}, False,
                        f"U_alpha[{alpha:g}]")


@dataclass
class FellerLimit:
    alphas: tuple
    values: tuple
    extrapolated: float
    closed_form: float
    relative_gap: float
    monotone: bool

    def to_dict(self):
        return {"alphas": list(self.alphas), "U_alpha": list(self.values),
                "extrapolated": self.extrapolated, "closed_form": self.closed_form,
                "relative_gap": self.relative_gap, "monotone": self.monotone}


def feller_limit(phi: BoundaryData, psi: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> FellerLimit:
    """Evaluate ``U_alpha`` along ``spec.alpha_schedule`` and extrapolate to ``alpha = inf``.

    Richardson extrapolation in ``1/alpha`` uses the two largest values.
    """
    alphas = spec.alpha_schedule
    reports = [feller_functional(a, phi, psi, spec) for a in alphas]
    values = tuple(r.value for r in reports)
    if len(alphas) >= 2:
        a1, a2 = alphas[-2], alphas[-1]
        v1, v2 = values[-2], values[-1]
        extrap = (a2 * v2 - a1 * v1) / (a2 - a1)
    else:
        extrap = values[-1]
    closed = closed_feller_functional(phi, psi, spec).value
    gap = abs(extrap - closed) / abs(closed) if closed != 0 else abs(extrap)
    # nondecreasing up to the reported quadrature errors: the approach to the
    # limit is exponentially fast, so late steps are below quadrature accuracy
    slack = [r.quad_error + r.tail_bound + 1e-12 * abs(r.value) for r in reports]
    monotone = all(b >= a - sa - sb for a, b, sa, sb in zip(values[:-1], values[1:], slack[:-1], slack[1:]))
    return FellerLimit(alphas, values, extrap, closed, gap, monotone)


def closed_feller_functional(phi: BoundaryData, psi: BoundaryData,
                             spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyReport:
    """``int int phi(xi) U(xi, xi') psi(xi')`` against the closed-form jump density.

    Each side pair reduces to ``int U(u) C(u) du`` with ``C`` the correlation
    of the two sides. Same-line pairs whose supports overlap give an
    infinite value (the density is not integrable on the diagonal) and raise
    :class:`DivergenceError`.
    """
    parts = {}
    err = 0.0
    for name, fa, fb, same in (
        ("lower-lower", phi.lower, psi.lower, True),
        ("upper-upper", phi.upper, psi.upper, True),
        ("lower-upper", phi.lower, psi.upper, False),
        ("upper-lower", phi.upper, psi.lower, False),
    ):
        if isinstance(fa, Constant) or isinstance(fb, Constant):
            if (isinstance(fa, Constant) and fa.value != 0.0) or (isinstance(fb, Constant) and fb.value != 0.0):
                raise DivergenceError("the Feller functional needs square-integrable data")
            parts[name] = 0.0
            continue
        kernel = feller_kernel(same)
        if same:
            lo, hi = _corr_support(fa, fb)
            if lo < 0.0 < hi and _overlap(fa, fb):
                raise DivergenceError(f"{name}: supports overlap on one line; use the difference form")
        v, e = _kernel_corr_integral(fa, fb, kernel, spec)
        parts[name] = v
        err += e
    value = math.fsum(parts.values())
    return EnergyReport(value, err, 0.0, parts, False, "feller")


def _overlap(fa, fb) -> bool:
    lo = max(fa.support[0], fb.support[0])
    hi = min(fa.support[1], fb.support[1])
    if not hi > lo:
        return False
    x = np.linspace(lo, hi, 257)
    return bool(np.any(np.abs(fa(x) * fb(x)) > 0))


def beurling_deny_consistency(f: BoundaryData, spec: QuadratureSpec = DEFAULT_SPEC) -> dict:
    """Recompute the trace energy as ``(1/2) int int (f(xi) - f(xi'))^2 U`` and compare.

    The jump part uses :func:`feller_kernel` on all four ordered side pairs;
    the diffusive part on the boundary is zero.
    """
    u = np.linspace(0.05, 10.0, 200)
    same_w = 0.5 * feller_kernel(True)(u)
    cross_w = 0.5 * 2.0 * feller_kernel(False)(u)
    coef_same = float(np.max(np.abs(same_w * 8.0 * PI * (np.cosh(u) - 1.0) - 1.0)))
    coef_cross = float(np.max(np.abs(cross_w * 4.0 * PI * (np.cosh(u) + 1.0) - 1.0)))

    if f.is_constant and f.lower.value == f.upper.value:
        jump = 0.0
    else:
        same = feller_kernel(True)
        cross = feller_kernel(False)
        terms = [
            same_side_integral(f.lower, same, spec),
            same_side_integral(f.upper, same, spec),
            cross_side_integral(f.lower, f.upper, cross, spec),
            cross_side_integral(f.upper, f.lower, cross, spec),
        ]
        jump = 0.5 * math.fsum(t.value for t in terms)
    trace = trace_energy(f, spec).value
    diff = abs(jump - trace) if math.isfinite(jump) and math.isfinite(trace) else (0.0 if jump == trace else math.inf)
    return {
        "jump_part": jump,
        "local_part": 0.0,
        "trace_energy": trace,
        "difference": diff,
        "coefficient_error_same": coef_same,
        "coefficient_error_cross": coef_cross,
    }


def norm_equivalence_report(family: Sequence[BoundaryData], spec: QuadratureSpec = DEFAULT_SPEC) -> dict:
    """Ratios ``(E(f) + |f|^2) / (sum of Gagliardo seminorms + |f|^2)`` over a family."""
    ratios = []
    rows = []
    for f in family:
        e = trace_energy(f, spec)
        g = math.fsum(gagliardo_seminorm(s, spec).value for s in (f.lower, f.upper))
        l2 = f.l2sq
        if not (math.isfinite(e.value) and math.isfinite(g)) or g + l2 == 0:
            continue
        r = (e.value + l2) / (g + l2)
        ratios.append(r)
        rows.append({"data": f.describe(), "trace": e.value, "gagliardo": g, "l2sq": l2, "ratio": r})
    return {"rows": rows, "min_ratio": min(ratios) if ratios else math.nan,
            "max_ratio": max(ratios) if ratios else math.nan}
