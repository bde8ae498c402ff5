import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from striplab.boundary import Gaussian, hat, indicator
from striplab.spectral import (
    fourier_envelope,
    graded_x2_rule,
    integrate_spectrum,
    profile,
    profile_dx2,
    profile_gram,
)

PI = math.pi


def _direct(kappa, a):
    # below 1e-8 the profile equals its linear limit to double precision
    e = lambda k, x: math.sinh(k * (PI - x)) / math.sinh(k * PI) if k > 1e-8 else (PI - x) / PI
    s = integrate.quad(lambda x: e(kappa, x) * e(a, x), 0, PI, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    c = integrate.quad(lambda x: e(kappa, x) * e(a, PI - x), 0, PI, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return s, c


@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_profile_gram_matches_quadrature(kappa, a):
    s, c = profile_gram(kappa, a)
    s0, c0 = _direct(kappa, a)
    assert float(s) == pytest.approx(s0, rel=1e-10, abs=1e-14)
    assert float(c) == pytest.approx(c0, rel=1e-9, abs=1e-14)


def test_profile_gram_near_coincidence_and_zero():
    for k in (1e-9, 1e-3, 0.02, 0.5, 3.0):
        s, c = profile_gram(k, k * (1 + 1e-9))
        s0, c0 = _direct(k, k)
        assert float(s) == pytest.approx(s0, rel=1e-8)
        assert float(c) == pytest.approx(c0, rel=1e-8)
    s, c = profile_gram(0.0, 0.0)
    assert float(s) == pytest.approx(PI / 3, rel=1e-14) and float(c) == pytest.approx(PI / 6, rel=1e-14)


def test_profile_gram_alpha_identity():
    # (kappa^2 - a^2) same = kappa coth(kappa pi) - a coth(a pi)
    kappa, a = 2.3, 1.1
    s, _ = profile_gram(kappa, a)
    expect = (kappa / math.tanh(kappa * PI) - a / math.tanh(a * PI)) / (kappa**2 - a**2)
    assert float(s) == pytest.approx(expect, rel=1e-13)


@given(st.floats(0.0, 500.0), st.floats(0.0, PI))
def test_profile_bounds_and_derivative(k, x2):
    v = float(profile(k, x2))
    assert 0.0 <= v <= 1.0 + 1e-15
    if 0.01 < x2 < PI - 0.01 and k < 50:
        h = 1e-6
        fd = (float(profile(k, x2 + h)) - float(profile(k, x2 - h))) / (2 * h)
        assert float(profile_dx2(k, x2)) == pytest.approx(fd, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("f", [Gaussian(0.5, 1.0), hat(0.0, 0.3), indicator(0.0, 2.0)], ids=str)
def test_fourier_envelope_dominates(f):
    w = np.linspace(0.01, 200.0, 4001)
    assert np.all(fourier_envelope(f, w) >= np.abs(f.fourier(w)) - 1e-12)


def test_integrate_spectrum_gaussian_moment():
    # 2 int_0^inf exp(-w^2) dw = sqrt(pi)
    r = integrate_spectrum(lambda w: np.exp(-w * w), lambda w: math.exp(-w * w), span=0.0, tol=1e-14)
    assert r.value == pytest.approx(math.sqrt(PI), rel=1e-13)
    assert r.tail_bound <= 1e-14


def test_graded_rule_integrates_boundary_layer():
    x, w = graded_x2_rule(1e-3)
    k = 500.0
    assert np.dot(w, np.exp(-k * x)) == pytest.approx((1 - math.exp(-k * PI)) / k, rel=1e-12)
    assert w.sum() == pytest.approx(PI, rel=1e-14)
