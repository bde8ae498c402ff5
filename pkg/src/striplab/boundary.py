"""Boundary data on the two lines of the strip.

A :class:`BoundaryData` is a pair ``(lower, upper)`` of real-line functions.
Each side is a :class:`BoundaryFunction` from a small closed-form registry
(``gauss``, ``indicator``, ``hat``, ``plateau``, ``constant``) or a
:class:`GridFunction` of uniform samples with zero extension.

Registry functions know their exact L2 norm, Fourier transform
``f^(w) = int f(x) exp(-i w x) dx`` and Gaussian smoothing ``(r_t * f)(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
from scipy import special

from .quadrature import gauss_legendre

__all__ = [
    "BoundaryFunction",
    "Gaussian",
    "PiecewiseLinear",
    "Constant",
    "GridFunction",
    "BoundaryData",
    "REGISTRY",
    "make_function",
    "parse_function",
    "sqdiff_shift",
    "correlation",
]


class BoundaryFunction:
    """Base class; subclasses are immutable."""

    name: str = "function"
    #: True when the function belongs to H^{1/2}(R)
    h_half: bool = True
    is_constant: bool = False

    def __call__(self, x):
        raise NotImplementedError

    @property
    def support(self) -> Tuple[float, float]:
        raise NotImplementedError

    @property
    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    @property
    def feature_scale(self) -> float:
        """Smallest length over which the function changes shape."""
        raise NotImplementedError

    @property
    def l2sq(self) -> float:
        raise NotImplementedError

    def fourier(self, w):
        raise NotImplementedError

    def heat(self, t, x):
        raise NotImplementedError

    def params(self) -> Dict[str, float]:
        return {}

    def describe(self) -> str:
        args = ",".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.name}({args})"

    def __repr__(self):
        return self.describe()

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.params().items()))))


class Gaussian(BoundaryFunction):
    """``amplitude * exp(-((x - center) / width)^2)``."""

    name = "gauss"

    def __init__(self, width: float = 1.0, center: float = 0.0, amplitude: float = 1.0):
        if width <= 0:
            raise ValueError("gauss width must be positive")
        self.width = float(width)
        self.center = float(center)
        self.amplitude = float(amplitude)

    def params(self):
        return {"width": self.width, "center": self.center, "amplitude": self.amplitude}

    def __call__(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.amplitude * np.exp(-z * z)

    @property
    def support(self):
        # exp(-81) ~ 6e-36: zero at double precision relative to the peak
        return (self.center - 9.0 * self.width, self.center + 9.0 * self.width)

    @property
    def feature_scale(self):
        return self.width

    @property
    def l2sq(self):
        return self.amplitude**2 * self.width * math.sqrt(math.pi / 2.0)

    def fourier(self, w):
        w = np.asarray(w, dtype=float)
        s = self.width
        return (self.amplitude * s * math.sqrt(math.pi)) * np.exp(-0.25 * s * s * w * w) * np.exp(-1j * w * self.center)

    def heat(self, t, x):
        v = self.width**2 + 2.0 * np.asarray(t, dtype=float)
        z = np.asarray(x, dtype=float) - self.center
        return self.amplitude * self.width / np.sqrt(v) * np.exp(-z * z / v)

    def sqdiff(self, u):
        u = np.asarray(u, dtype=float)
        return -2.0 * self.l2sq * np.expm1(-0.5 * u * u / self.width**2)


def _ramp_heat(z, sigma):
    # E[max(z + sigma Z, 0)]
    zs = z / sigma
    return z * special.ndtr(zs) + sigma * np.exp(-0.5 * zs * zs) / math.sqrt(2.0 * math.pi)


class PiecewiseLinear(BoundaryFunction):
    """Compactly supported piecewise-linear function, possibly with jumps.

    ``knots`` is nondecreasing; a repeated knot encodes a jump from the
    value on its left to the value on its right. The function vanishes
    outside ``[knots[0], knots[-1]]``.
    """

    name = "pwlinear"

    def __init__(self, knots: Sequence[float], values: Sequence[float], name: str | None = None,
                 params: Dict[str, float] | None = None):
        xs = np.asarray(knots, dtype=float)
        ys = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("knots and values must be 1-D of equal length >= 2")
        if np.any(np.diff(xs) < 0):
            raise ValueError("knots must be nondecreasing")
        if ys[0] != 0.0:
            xs = np.concatenate([[xs[0]], xs])
            ys = np.concatenate([[0.0], ys])
        if ys[-1] != 0.0:
            xs = np.concatenate([xs, [xs[-1]]])
            ys = np.concatenate([ys, [0.0]])
        self.xs = xs
        self.ys = ys
        if name is not None:
            self.name = name
        self._params = dict(params) if params else {"n_knots": float(xs.size)}
        dx = np.diff(xs)
        jumps = (dx == 0) & (np.diff(ys) != 0)
        self.h_half = not bool(np.any(jumps))
        # ramp/step representation: f = sum slope_change * ramp(x - b) + sum jump * step(x - b)
        seg = dx > 0
        slopes = np.zeros(dx.size)
        slopes[seg] = np.diff(ys)[seg] / dx[seg]
        padded = np.concatenate([[0.0], slopes, [0.0]])
        change = np.diff(padded)  # at each knot
        jump = np.zeros(xs.size)
        jump_idx = np.nonzero(jumps)[0]
        jump[jump_idx] = np.diff(ys)[jump_idx]
        self._ramp_b = xs[change != 0]
        self._ramp_s = change[change != 0]
        self._step_b = xs[jump != 0]
        self._step_s = jump[jump != 0]

    def params(self):
        return dict(self._params)

    def __eq__(self, other):
        return (isinstance(other, PiecewiseLinear) and np.array_equal(self.xs, other.xs)
                and np.array_equal(self.ys, other.ys))

    def __hash__(self):
        return hash((self.xs.tobytes(), self.ys.tobytes()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xs, ys = self.xs, self.ys
        i = np.searchsorted(xs, x, side="right") - 1
        inside = (i >= 0) & (i < xs.size - 1)
        i = np.clip(i, 0, xs.size - 2)
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = ys[i], ys[i + 1]
        h = x1 - x0
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(h > 0, (x - x0) / np.where(h > 0, h, 1.0), 0.0)
        return np.where(inside, y0 + (y1 - y0) * frac, 0.0)

    @property
    def support(self):
        return (float(self.xs[0]), float(self.xs[-1]))

    @property
    def breakpoints(self):
        return np.unique(self.xs)

    @property
    def feature_scale(self):
        d = np.diff(np.unique(self.xs))
        return float(d.min()) if d.size else 1.0

    @property
    def l2sq(self):
        h = np.diff(self.xs)
        a, b = self.ys[:-1], self.ys[1:]
        return float(np.sum(h * (a * a + a * b + b * b) / 3.0))

    def fourier(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape, dtype=complex)
        lo, hi = self.support
        small = np.abs(w) * max(hi - lo, 1e-300) < 1e-2
        big = ~small
        if np.any(big):
            wb = w[big][..., None]
            ramp = -np.sum(self._ramp_s * np.exp(-1j * wb * self._ramp_b), axis=-1) / w[big] ** 2
            step = np.sum(self._step_s * np.exp(-1j * wb * self._step_b), axis=-1) / (1j * w[big])
            out[big] = ramp + step
        if np.any(small):
            x, wt = _piecewise_nodes(self.xs, 8)
            out[small] = np.exp(-1j * w[small][..., None] * x) @ (wt * self(x))
        return out

    def heat(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        sigma = np.sqrt(t)[..., None]
        z = x[..., None] - self._ramp_b
        out = np.sum(self._ramp_s * _ramp_heat(z, sigma), axis=-1)
        if self._step_b.size:
            zs = x[..., None] - self._step_b
            out = out + np.sum(self._step_s * special.ndtr(zs / sigma), axis=-1)
        return out


def indicator(a: float = 0.0, b: float = 1.0, amplitude: float = 1.0) -> PiecewiseLinear:
    if not b > a:
        raise ValueError("indicator needs a < b")
    return PiecewiseLinear([a, a, b, b], [0.0, amplitude, amplitude, 0.0], name="indicator",
                           params={"a": float(a), "b": float(b), "amplitude": float(amplitude)})


def hat(center: float = 0.0, halfwidth: float = 1.0, amplitude: float = 1.0) -> PiecewiseLinear:
    if halfwidth <= 0:
        raise ValueError("hat halfwidth must be positive")
    c, w = float(center), float(halfwidth)
    return PiecewiseLinear([c - w, c, c + w], [0.0, amplitude, 0.0], name="hat",
                           params={"center": c, "halfwidth": w, "amplitude": float(amplitude)})


def plateau(halfwidth: float = 1.0, ramp: float = 1.0, center: float = 0.0,
            amplitude: float = 1.0) -> PiecewiseLinear:
    """Equal to ``amplitude`` on ``[center - halfwidth, center + halfwidth]``, linear tapers of length ``ramp``."""
    if halfwidth < 0 or ramp <= 0:
        raise ValueError("plateau needs halfwidth >= 0 and ramp > 0")
    c, L, r = float(center), float(halfwidth), float(ramp)
    return PiecewiseLinear([c - L - r, c - L, c + L, c + L + r], [0.0, amplitude, amplitude, 0.0],
                           name="plateau",
                           params={"halfwidth": L, "ramp": r, "center": c, "amplitude": float(amplitude)})


class GridFunction(PiecewiseLinear):
    """Samples on a uniform grid over ``[-R, R]``, linearly interpolated.

    Every sample carries a full hat, so the function returns to zero one grid
    spacing beyond each end of the window.
    """

    name = "grid"

    def __init__(self, values: Sequence[float], radius: float):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("grid data needs at least two samples")
        if radius <= 0:
            raise ValueError("grid radius must be positive")
        self.radius = float(radius)
        self.values = values
        xs = np.linspace(-radius, radius, values.size)
        h = xs[1] - xs[0]
        xs = np.concatenate([[xs[0] - h], xs, [xs[-1] + h]])
        super().__init__(xs, np.concatenate([[0.0], values, [0.0]]), name="grid",
                         params={"radius": self.radius, "n": float(values.size)})


class Constant(BoundaryFunction):
    name = "constant"
    is_constant = True

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def params(self):
        return {"value": self.value}

    def __call__(self, x):
        return np.full(np.shape(x), self.value)

    @property
    def support(self):
        if self.value == 0.0:
            return (0.0, 0.0)
        return (-math.inf, math.inf)

    @property
    def feature_scale(self):
        return math.inf

    @property
    def l2sq(self):
        return 0.0 if self.value == 0.0 else math.inf

    def fourier(self, w):
        if self.value != 0.0:
            raise ValueError("a nonzero constant has no Fourier transform as a function")
        return np.zeros(np.shape(w), dtype=complex)

    def heat(self, t, x):
        return np.full(np.broadcast(np.asarray(t), np.asarray(x)).shape, self.value)

    def sqdiff(self, u):
        return np.zeros(np.shape(u))

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0


def _gaussian(width=1.0, center=0.0, amplitude=1.0):
    return Gaussian(width, center, amplitude)


REGISTRY: Dict[str, Callable[..., BoundaryFunction]] = {
    "gauss": _gaussian,
    "indicator": indicator,
    "hat": hat,
    "plateau": plateau,
    "constant": Constant,
    "zero": lambda: Constant(0.0),
}


def make_function(name: str, *args, **kwargs) -> BoundaryFunction:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown boundary function {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(*args, **kwargs)


def parse_function(text: str) -> BoundaryFunction:
    """Parse ``"gauss(1)"``, ``"indicator(a=0,b=1)"``, ``"0"`` or ``"constant(2)"``."""
    text = text.strip()
    try:
        return Constant(float(text))
    except ValueError:
        pass
    if "(" not in text:
        return make_function(text)
    if not text.endswith(")"):
        raise ValueError(f"malformed boundary function {text!r}")
    name, body = text[:-1].split("(", 1)
    args, kwargs = [], {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        if "=" in item:
            k, v = item.split("=", 1)
            kwargs[k.strip()] = float(v)
        else:
            args.append(float(item))
    return make_function(name.strip(), *args, **kwargs)


@dataclass(frozen=True)
class BoundaryData:
    """Pair of functions on the lower (``x2 = 0``) and upper (``x2 = pi``) lines."""

    lower: BoundaryFunction = field(default_factory=lambda: Constant(0.0))
    upper: BoundaryFunction = field(default_factory=lambda: Constant(0.0))

    def __post_init__(self):
        for side in (self.lower, self.upper):
            if not isinstance(side, BoundaryFunction):
                raise TypeError(f"expected a BoundaryFunction, got {type(side).__name__}")

    @classmethod
    def parse(cls, lower: str, upper: str) -> "BoundaryData":
        return cls(parse_function(lower), parse_function(upper))

    def side(self, side) -> BoundaryFunction:
        from .kernels import BoundarySide
        return self.lower if BoundarySide.parse(side) is BoundarySide.LOWER else self.upper

    def swapped(self) -> "BoundaryData":
        return BoundaryData(self.upper, self.lower)

    @property
    def l2sq(self) -> float:
        return self.lower.l2sq + self.upper.l2sq

    @property
    def h_half(self) -> bool:
        return self.lower.h_half and self.upper.h_half

    @property
    def is_constant(self) -> bool:
        return self.lower.is_constant and self.upper.is_constant

    def describe(self) -> Dict[str, str]:
        return {"lower": self.lower.describe(), "upper": self.upper.describe()}


# --------------------------------------------------------------------------
# one-dimensional correlation integrals


def _piecewise_nodes(breaks, order):
    breaks = np.unique(np.asarray(breaks, dtype=float))
    if breaks.size < 2:
        return np.empty(0), np.empty(0)
    x, w = gauss_legendre(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _panel_breaks(funcs_and_shifts, lo, hi):
    pts = [lo, hi]
    smooth_scale = math.inf
    for f, shift in funcs_and_shifts:
        if isinstance(f, PiecewiseLinear):
            pts.extend(f.breakpoints - shift)
        elif isinstance(f, Gaussian):
            smooth_scale = min(smooth_scale, f.width)
    pts = np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
    if math.isfinite(smooth_scale):
        # refine so that smooth pieces are resolved by the Gauss rule
        h = 0.5 * smooth_scale
        refined = [pts[:1]]
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(1, int(math.ceil((b - a) / h)))
            refined.append(np.linspace(a, b, n + 1)[1:])
        pts = np.concatenate(refined)
    return pts


def sqdiff_shift(fa: BoundaryFunction, fb: BoundaryFunction, u: float, order: int = 12) -> float:
    """``int (fa(x + u) - fb(x))^2 dx`` for square-integrable ``fa``, ``fb``.

    Exact for piecewise-linear data (Gauss rule on every piece); Gaussian
    pieces use panels of half a width.
    """
    if fa is fb and hasattr(fa, "sqdiff"):
        return float(fa.sqdiff(u))
    if isinstance(fa, Constant) and isinstance(fb, Constant):
        return 0.0 if fa.value == fb.value else math.inf
    if (isinstance(fa, Constant) and not fa.is_zero) or (isinstance(fb, Constant) and not fb.is_zero):
        return math.inf
    if isinstance(fa, Gaussian) and isinstance(fb, Gaussian):
        return fa.l2sq + fb.l2sq - 2.0 * _gauss_corr(fa, fb, u)
    la, ha = fa.support
    lb, hb = fb.support
    lo = min(la - u, lb)
    hi = max(ha - u, hb)
    if not hi > lo:
        return 0.0
    pts = _panel_breaks([(fa, u), (fb, 0.0)], lo, hi)
    x, w = _piecewise_nodes(pts, order)
    d = fa(x + u) - fb(x)
    return float(np.dot(w, d * d))


def _gauss_corr(fa: Gaussian, fb: Gaussian, u):
    a, b = fa.width**2, fb.width**2
    shift = fa.center - u - fb.center
    return fa.amplitude * fb.amplitude * math.sqrt(math.pi * a * b / (a + b)) * np.exp(-shift**2 / (a + b))


def correlation(fa: BoundaryFunction, fb: BoundaryFunction, u: float, order: int = 12) -> float:
    """``int fa(x + u) fb(x) dx``."""
    if isinstance(fa, Constant) or isinstance(fb, Constant):
        if (isinstance(fa, Constant) and fa.is_zero) or (isinstance(fb, Constant) and fb.is_zero):
            return 0.0
        raise ValueError("correlation with a nonzero constant is not finite")
    if isinstance(fa, Gaussian) and isinstance(fb, Gaussian):
        return float(_gauss_corr(fa, fb, u))
    la, ha = fa.support
    lb, hb = fb.support
    lo = max(la - u, lb)
    hi = min(ha - u, hb)
    if not hi > lo:
        return 0.0
    pts = _panel_breaks([(fa, u), (fb, 0.0)], lo, hi)
    x, w = _piecewise_nodes(pts, order)
    return float(np.dot(w, fa(x + u) * fb(x)))
