import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from striplab.boundary import BoundaryData, Constant, Gaussian, hat
from striplab.forms import form_A, form_A0, form_A1, form_A2, form_Ainf
from striplab.mosco import (
    FormKind,
    GalerkinBasis,
    SolverError,
    assemble_form,
    assemble_mass,
    bspline3,
    mosco_scan,
    resolvent_apply,
    semigroup_apply,
)

SMALL = GalerkinBasis(R=4.0, m=33)
MASS = assemble_mass(SMALL)
RNG = np.random.default_rng(7)
COEF = np.concatenate([np.exp(-SMALL.nodes ** 2), 0.5 * np.exp(-(SMALL.nodes - 1) ** 2)])


def test_bspline_is_hat_self_correlation():
    for s in (0.0, 0.4, 1.0, 1.7, 2.5):
        direct = integrate.quad(lambda x: max(0, 1 - abs(x)) * max(0, 1 - abs(x - s)), -1, 3, points=sorted({0, 1, s - 1, s, s + 1}), epsabs=1e-14)[0]
        assert float(bspline3(s)) == pytest.approx(direct, abs=1e-13)


def test_mass_matrix_is_l2_gram():
    assert MASS.norm(COEF) ** 2 == pytest.approx(SMALL.function(COEF).l2sq, rel=1e-13)


@pytest.mark.parametrize("kind, ell", [("A0", None), ("A1", 0.7), ("A2", 0.7), ("A", 2.0), ("scaled", 0.3), ("Ainf", None)])
def test_form_matrix_structure(kind, ell):
    A = assemble_form(kind, ell, SMALL)
    assert A.asymmetry < 1e-12
    block = A.lower_lower
    # Toeplitz: constant along diagonals
    assert np.allclose(block[1:, 1:], block[:-1, :-1], atol=1e-14 * np.abs(block).max())
    assert np.allclose(A.upper_upper, A.lower_lower)
    assert np.linalg.eigvalsh(A.matrix).min() >= -1e-10 * np.abs(A.matrix).max()


@pytest.mark.parametrize("kind, ell, form", [
    ("A0", None, lambda f: form_A0(f)),
    ("A1", 0.7, lambda f: form_A1(0.7, f)),
    ("A2", 0.7, lambda f: form_A2(0.7, f)),
    ("A", 2.0, lambda f: form_A(2.0, f)),
    ("Ainf", None, lambda f: form_Ainf(f)),
])
def test_quadratic_form_matches_continuous_form(kind, ell, form):
    A = assemble_form(kind, ell, SMALL)
    assert A.value(COEF) == pytest.approx(form(SMALL.function(COEF)).value, rel=1e-8)


def test_scaled_form_is_ell_times_A():
    A = assemble_form("A", 0.4, SMALL)
    S = assemble_form(FormKind.SCALED, 0.4, SMALL)
    assert np.allclose(S.matrix, 0.4 * A.matrix, rtol=1e-14, atol=0)


def test_discrete_A2_is_monotone_in_ell():
    c = np.concatenate([np.zeros(SMALL.m), COEF[: SMALL.m]])
    vals = [assemble_form("A2", e, SMALL).value(c) for e in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(b > a for a, b in zip(vals[:-1], vals[1:]))


def test_resolvent_of_zero_form_is_scaled_identity():
    zero = assemble_form("A0", None, SMALL).scaled(0.0)
    c = np.concatenate([COEF[: SMALL.m], COEF[: SMALL.m]])
    r = resolvent_apply(zero, MASS, 2.5, c)
    assert np.allclose(r.coef, c / 2.5, atol=1e-13)
    # constant in the line index: the A0 form vanishes on equal sides
    r = resolvent_apply(assemble_form("A0", None, SMALL), MASS, 2.5, c)
    assert np.allclose(r.coef, c / 2.5, atol=1e-13)


@settings(max_examples=15)
@given(st.floats(0.1, 10.0), st.floats(0.2, 5.0))
def test_resolvent_is_contraction(alpha, ell):
    A = assemble_form("A", ell, SMALL)
    f = RNG.normal(size=SMALL.dim)
    r = resolvent_apply(A, MASS, alpha, f)
    assert r.residual < 1e-10
    assert alpha * MASS.norm(r.coef) <= MASS.norm(f) * (1 + 1e-12)


def test_resolvent_rejects_bad_input():
    A = assemble_form("A2", 1.0, SMALL)
    with pytest.raises(ValueError):
        resolvent_apply(A, MASS, 0.0, COEF)
    with pytest.raises(SolverError):
        resolvent_apply(A.scaled(-50.0), MASS, 1e-3, COEF)
    with pytest.raises(ValueError):
        assemble_form("A1", None, SMALL)
    with pytest.raises(ValueError):
        GalerkinBasis(m=2)


def test_semigroup_decays_energy_and_norm():
    A = assemble_form("A", 1.0, SMALL)
    c1 = semigroup_apply(A, MASS, 0.5, 20, COEF)
    c2 = semigroup_apply(A, MASS, 2.0, 80, COEF)
    assert MASS.norm(c2) < MASS.norm(c1) < MASS.norm(COEF)
    assert A.value(c2) < A.value(c1) < A.value(COEF)


def test_trivial_schedule_has_zero_gap():
    r = mosco_scan(1.5, [1.5], basis=SMALL)
    assert r.final_relative_gap == pytest.approx(0.0, abs=1e-14)


def test_scan_towards_zero_and_infinity():
    r0 = mosco_scan(0.0, [1.0, 0.25, 1 / 16], basis=SMALL)
    assert r0.monotone and r0.final_relative_gap < 0.05
    rinf = mosco_scan(math.inf, [1.0, 4.0, 16.0], basis=SMALL)
    assert rinf.monotone
    assert abs(rinf.form_values[-1] - rinf.target_form_value) < abs(rinf.form_values[0] - rinf.target_form_value)
    d = rinf.to_dict()
    assert d["target"] == "inf" and len(rinf.rows()) == 3
