import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from striplab.boundary import BoundaryData, Constant, Gaussian, correlation, hat, indicator, sqdiff_shift
from striplab.forms import (
    QuadratureSpec,
    beurling_deny_consistency,
    closed_feller_functional,
    cross_side_integral,
    cross_kernel,
    feller_functional,
    feller_limit,
    form_A,
    form_A0,
    form_A1,
    form_A2,
    form_Ainf,
    form_value,
    gagliardo_seminorm,
    interior_energy,
    same_kernel,
    same_side_integral,
    trace_energy,
)
from striplab.harmonic import DivergenceError
from striplab.kernels import scaled_jump_kernels

PI = math.pi
ZERO = Constant(0.0)
G = Gaussian(1.0)

# oracles: mpmath double integrals at 25 digits


@pytest.mark.parametrize("f, expected", [
    (BoundaryData(G, ZERO), 0.5397957258572371192),
    (BoundaryData(G, G), 0.8729704875725672012),
])
def test_trace_energy_oracles(f, expected):
    r = trace_energy(f)
    assert not r.diverged
    assert r.value == pytest.approx(expected, rel=1e-9)
    assert set(r.breakdown) == {"cross-side", "same-side-lower", "same-side-upper"}


@pytest.mark.parametrize("ell, expected", [
    (0.5, 6.136508807917548010), (1.0, 8.553289745076128034), (2.0, 10.31836259624915685),
    (4.0, 11.37830329861572199), (8.0, 11.95606324797907262),
])
def test_A2_oracles(ell, expected):
    assert form_A2(ell, BoundaryData(ZERO, G)).value == pytest.approx(expected, rel=1e-9)


def test_Ainf_values():
    f = BoundaryData(ZERO, G)
    assert form_Ainf(f, scaled=False).value == pytest.approx(4 * PI, rel=1e-9)
    assert form_Ainf(f).value == pytest.approx(0.5, rel=1e-9)
    assert gagliardo_seminorm(G).value == pytest.approx(2 * PI, rel=1e-9)


@pytest.mark.parametrize("ell, expected", [(1.0, 1.256359638760036283), (0.25, 1.774685540208304498)])
def test_A1_oracles(ell, expected):
    # oracle: 2|g|^2/ell - 2 int k1(u) C(u) du with the Gaussian correlation C in closed form
    f = BoundaryData(G, Gaussian(1.0, 0.5))
    assert form_A1(ell, f).value == pytest.approx(expected, rel=1e-9)


def test_A1_scaled_limit_is_A0():
    f = BoundaryData(G, Gaussian(1.0, 0.5))
    a0 = form_A0(f).value * 2 * PI
    vals = [ell * form_A1(ell, f).value for ell in (8.0, 2.0, 0.5, 0.125, 1.0 / 32)]
    assert vals[-1] == pytest.approx(a0, rel=1e-2)
    assert all(abs(b - a0) <= abs(a - a0) + 1e-12 for a, b in zip(vals[:-1], vals[1:]))


def test_A0_closed_form():
    assert form_A0(BoundaryData(ZERO, G)).value == pytest.approx(math.sqrt(PI / 2) / (2 * PI), rel=1e-14)
    assert form_A0(BoundaryData(G, G)).value == 0.0


def test_form_A_at_unit_scale_is_trace():
    f = BoundaryData(Gaussian(0.7, 0.5), hat(0.0, 1.0))
    assert form_A(1.0, f).value == pytest.approx(trace_energy(f).value, rel=1e-12)
    assert form_value("traceT", f).value == pytest.approx(trace_energy(f).value, rel=1e-14)
    with pytest.raises(ValueError):
        form_value("B7", f)


def test_jump_data_diverge_on_one_line():
    r = trace_energy(BoundaryData(indicator(0.0, 1.0), ZERO))
    assert r.diverged and math.isinf(r.value)
    assert form_Ainf(BoundaryData(ZERO, indicator())).diverged
    # no singularity across lines
    assert not form_A1(1.0, BoundaryData(indicator(), ZERO)).diverged


def test_constants_have_zero_energy():
    assert trace_energy(BoundaryData(Constant(2.0), Constant(2.0))).value == 0.0
    assert interior_energy(BoundaryData(Constant(2.0), Constant(2.0))).value == 0.0
    assert form_A2(3.0, BoundaryData(Constant(1.0), Constant(-1.0))).value == 0.0


def test_translation_and_swap_invariance():
    f = BoundaryData(Gaussian(0.8), hat(0.3, 1.0))
    g = BoundaryData(Gaussian(0.8, 2.0), hat(2.3, 1.0))
    assert trace_energy(f).value == pytest.approx(trace_energy(g).value, rel=1e-10)
    assert trace_energy(f).value == pytest.approx(trace_energy(f.swapped()).value, rel=1e-10)


def _direct_same(f, k):
    d = lambda u: float(k(u)) * sqdiff_shift(f, f, u)
    return 2 * integrate.quad(d, 0, 60, points=[0.5, 1.0, 2.0], limit=400, epsabs=1e-12)[0]


@settings(max_examples=8)
@given(st.floats(0.3, 3.0))
def test_same_side_integral_against_direct_quadrature(ell):
    f = hat(0.0, 1.0)
    k = lambda u: scaled_jump_kernels(ell, u)[1]
    assert same_side_integral(f, same_kernel(ell), QuadratureSpec()).value == \
        pytest.approx(_direct_same(f, k), rel=1e-7)


def test_cross_side_integral_against_direct_quadrature():
    fa, fb = hat(0.0, 1.0), indicator(0.0, 2.0)
    ell = 0.7
    k = lambda u: float(scaled_jump_kernels(ell, u)[0])
    corr = integrate.quad(lambda u: k(u) * correlation(fa, fb, u), -60, 60, points=[-3, -1, 0, 1, 2],
                          limit=400, epsabs=1e-13)[0]
    direct = (fa.l2sq + fb.l2sq) / ell - 2 * corr
    assert cross_side_integral(fa, fb, cross_kernel(ell), QuadratureSpec()).value == pytest.approx(direct, rel=1e-8)


@pytest.mark.parametrize("f", [BoundaryData(G, ZERO), BoundaryData(G, G), BoundaryData(Gaussian(0.7, 0.5), hat(0.0, 1.0))],
                         ids=str)
def test_trace_equals_interior_energy(f):
    assert interior_energy(f).value == pytest.approx(trace_energy(f).value, rel=1e-6)


@pytest.mark.parametrize("phi, psi, expected", [
    (BoundaryData(hat(0.0, 1.0), ZERO), BoundaryData(ZERO, hat(0.5, 1.0)), 0.03509055191761388312),
    (BoundaryData(indicator(-0.1, 0.1), ZERO), BoundaryData(ZERO, indicator(-0.1, 0.1)), 0.001588903900683207399),
    (BoundaryData(hat(0.5, 0.5), ZERO), BoundaryData(hat(2.5, 0.5), ZERO), 0.007894708027148853333),
])
def test_closed_feller_functional_oracles(phi, psi, expected):
    assert closed_feller_functional(phi, psi).value == pytest.approx(expected, rel=1e-9)


def test_feller_limit_approaches_closed_form():
    phi, psi = BoundaryData(hat(0.0, 1.0), ZERO), BoundaryData(ZERO, hat(0.5, 1.0))
    lim = feller_limit(phi, psi)
    assert lim.monotone
    assert lim.relative_gap < 1e-6
    small = feller_functional(1.0, phi, psi).value
    assert 0 < small < lim.values[0]


def test_closed_feller_rejects_overlapping_same_line():
    with pytest.raises(DivergenceError):
        closed_feller_functional(BoundaryData(G, ZERO), BoundaryData(G, ZERO))


@pytest.mark.parametrize("f", [BoundaryData(G, ZERO), BoundaryData(hat(0.0, 1.0), Gaussian(0.5, 1.0))], ids=str)
def test_beurling_deny_decomposition(f):
    r = beurling_deny_consistency(f)
    assert r["local_part"] == 0.0
    assert r["difference"] <= 1e-9 * r["trace_energy"]
    assert r["coefficient_error_same"] < 1e-12 and r["coefficient_error_cross"] < 1e-12


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(window=-1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(alpha_schedule=(0.0, 1.0))
    assert QuadratureSpec(alpha_schedule=(10.0, 1.0)).alpha_schedule == (1.0, 10.0)
