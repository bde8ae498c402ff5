import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from striplab.boundary import (
    BoundaryData,
    Constant,
    Gaussian,
    GridFunction,
    PiecewiseLinear,
    correlation,
    hat,
    indicator,
    make_function,
    parse_function,
    plateau,
    sqdiff_shift,
)


def _quad(fun, lo, hi, pts=()):
    pts = sorted(p for p in set(pts) if lo < p < hi)
    return integrate.quad(fun, lo, hi, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12)[0]


FUNCS = [
    Gaussian(1.0),
    Gaussian(0.6, 0.4, -1.5),
    indicator(-0.5, 1.0, 2.0),
    hat(0.3, 0.8),
    plateau(1.0, 0.5, -0.2, 0.7),
    PiecewiseLinear([-1.0, 0.0, 0.0, 2.0], [0.0, 1.0, -1.0, 0.0]),
]


@pytest.mark.parametrize("f", FUNCS, ids=lambda f: f.describe())
def test_l2_norm_matches_quadrature(f):
    lo, hi = f.support
    assert f.l2sq == pytest.approx(_quad(lambda x: float(f(x)) ** 2, lo, hi, f.breakpoints), rel=1e-11)


@pytest.mark.parametrize("f", FUNCS, ids=lambda f: f.describe())
@pytest.mark.parametrize("w", [0.0, 0.3, 2.0, 7.5])
def test_fourier_matches_quadrature(f, w):
    lo, hi = f.support
    re = _quad(lambda x: float(f(x)) * math.cos(w * x), lo, hi, f.breakpoints)
    im = -_quad(lambda x: float(f(x)) * math.sin(w * x), lo, hi, f.breakpoints)
    assert complex(f.fourier(w)) == pytest.approx(complex(re, im), abs=1e-10)


@pytest.mark.parametrize("f", FUNCS, ids=lambda f: f.describe())
@pytest.mark.parametrize("t, x", [(0.05, 0.1), (1.0, -0.7), (4.0, 2.0)])
def test_heat_matches_convolution(f, t, x):
    lo, hi = f.support
    g = lambda s: float(f(s)) * math.exp(-(x - s) ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)
    assert float(f.heat(t, x)) == pytest.approx(_quad(g, lo, hi, f.breakpoints), abs=1e-11)


pairs = st.sampled_from([(a, b) for a in FUNCS for b in FUNCS[:4]])


@given(pairs, st.floats(-3.0, 3.0))
def test_shift_integrals_match_quadrature(pair, u):
    fa, fb = pair
    lo = min(fa.support[0] - u, fb.support[0])
    hi = max(fa.support[1] - u, fb.support[1])
    pts = list(np.asarray(fa.breakpoints) - u) + list(fb.breakpoints)
    sq = _quad(lambda x: (float(fa(x + u)) - float(fb(x))) ** 2, lo, hi, pts)
    co = _quad(lambda x: float(fa(x + u)) * float(fb(x)), lo, hi, pts)
    assert sqdiff_shift(fa, fb, u) == pytest.approx(sq, abs=1e-10)
    assert correlation(fa, fb, u) == pytest.approx(co, abs=1e-10)


def test_gaussian_sqdiff_closed_form():
    g = Gaussian(1.0)
    u = np.array([1e-6, 0.5, 3.0])
    assert np.allclose(g.sqdiff(u), [sqdiff_shift(g, g, v) for v in u], rtol=1e-9, atol=1e-20)


def test_jump_and_regularity_flags():
    assert not indicator().h_half
    assert hat().h_half and Gaussian().h_half
    assert Constant(2.0).is_constant and Constant(0.0).is_zero


def test_registry_and_parser():
    assert parse_function("gauss(1)") == Gaussian(1.0)
    assert parse_function("indicator(a=0,b=1)") == indicator(0.0, 1.0)
    assert parse_function("0") == Constant(0.0)
    assert parse_function("constant(2.5)") == Constant(2.5)
    assert make_function("hat", 0.0, 1.0) == hat(0.0, 1.0)
    with pytest.raises(ValueError):
        parse_function("nope(1)")
    with pytest.raises(ValueError):
        Gaussian(0.0)
    d = BoundaryData.parse("gauss(1)", "hat(center=1)")
    assert d.swapped().lower == d.upper
    assert d.l2sq == pytest.approx(Gaussian(1.0).l2sq + hat(1.0).l2sq)
    with pytest.raises(TypeError):
        BoundaryData(1.0, Constant(0.0))


def test_grid_function_is_sum_of_full_hats():
    vals = np.array([1.0, -2.0, 0.5])
    g = GridFunction(vals, 1.0)
    x = np.linspace(-2.5, 2.5, 101)
    expect = sum(v * np.maximum(0.0, 1.0 - np.abs(x - c)) for v, c in zip(vals, (-1.0, 0.0, 1.0)))
    assert np.allclose(g(x), expect, atol=1e-15)
    assert g.support == (-2.0, 2.0)
