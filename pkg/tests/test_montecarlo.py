import math

import numba as nb
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from striplab.kernels import BoundarySide, InteriorPoint, exit_probability
from striplab.montecarlo import (
    DEFAULT_BIN_EDGES,
    EmpiricalLaw,
    ExcursionHarvester,
    SimConfig,
    _normal,
    _path_key,
    empirical_exit_time,
    excursion_harvest,
    excursion_jump_law,
    exit_place_histogram,
    fold,
    poisson_bin_integrals,
    reflected_heat_kernel,
    reflected_marginal,
    sample_exit,
    simulate_reflected,
)

PI = math.pi


@nb.njit
def _draw(seed, n):
    key = _path_key(seed, np.uint64(0))
    ctr = np.uint64(0)
    out = np.empty(n)
    for i in range(n):
        out[i], ctr = _normal(key, ctr)
    return out


def test_ziggurat_normals_are_standard():
    z = _draw(np.uint64(12345), 400_000)
    assert abs(z.mean()) < 5 * 1 / math.sqrt(z.size)
    assert z.var() == pytest.approx(1.0, abs=0.01)
    assert abs(stats.skew(z)) < 0.02
    assert stats.kurtosis(z) == pytest.approx(0.0, abs=0.05)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    # tail beyond the base strip of the ziggurat
    tail = np.mean(np.abs(z) > 3.6541528853610088)
    assert tail == pytest.approx(2 * stats.norm.sf(3.6541528853610088), rel=0.4)


def test_fold_examples_and_range():
    assert fold(-0.3) == pytest.approx(0.3, abs=1e-15)
    assert fold(PI + 0.2) == pytest.approx(PI - 0.2, abs=1e-14)
    assert fold(2 * PI + 0.5) == pytest.approx(0.5, abs=1e-14)
    assert fold(1.0) == 1.0


@given(st.floats(-50.0, 50.0))
def test_fold_is_reflection(y):
    v = fold(y)
    assert 0.0 <= v <= PI
    assert math.cos(v) == pytest.approx(math.cos(y), abs=1e-12)


def test_config_validation():
    for bad in ({"dt": 0.0}, {"dt": math.nan}, {"n_paths": 0}, {"horizon": -1.0}, {"seed": -1},
                {"workers": 0}):
        with pytest.raises(ValueError):
            SimConfig(**bad)


SMALL = SimConfig(dt=1e-3, n_paths=20_000, seed=11)


@pytest.fixture(scope="module")
def centre_batch():
    return sample_exit((0.0, PI / 2), SMALL)


def test_exit_sampling_is_deterministic(centre_batch):
    again = sample_exit((0.0, PI / 2), SMALL)
    assert np.array_equal(again.tau, centre_batch.tau) and np.array_equal(again.xi1, centre_batch.xi1)
    other = sample_exit((0.0, PI / 2), SimConfig(dt=1e-3, n_paths=20_000, seed=12))
    assert not np.array_equal(other.tau, centre_batch.tau)


def test_exit_batch_statistics(centre_batch):
    b = centre_batch
    n = len(b)
    assert b.n_exited == n and b.diagnostics()["truncated"] == 0
    assert b.side_probability("lower") == pytest.approx(0.5, abs=4 * 0.5 / math.sqrt(n))
    # optional stopping: E tau = x2 (pi - x2), Var xi1 = E tau
    assert b.tau.mean() == pytest.approx(PI ** 2 / 4, rel=0.03)
    assert b.xi1.var() == pytest.approx(PI ** 2 / 4, rel=0.05)
    s = b[0]
    assert s.side in (BoundarySide.LOWER, BoundarySide.UPPER)


def test_side_probability_off_centre():
    b = sample_exit((0.0, PI / 4), SMALL)
    assert b.side_probability(BoundarySide.LOWER) == pytest.approx(exit_probability(PI / 4, "lower"), abs=0.015)


def test_bridge_correction_removes_overshoot_bias():
    coarse = dict(dt=1e-2, n_paths=20_000, seed=3)
    with_bridge = sample_exit((0.0, PI / 2), SimConfig(**coarse)).tau.mean()
    without = sample_exit((0.0, PI / 2), SimConfig(bridge_correction=False, **coarse)).tau.mean()
    exact = PI ** 2 / 4
    assert abs(with_bridge - exact) < 0.05
    assert without - exact > 0.1


def test_truncation_is_reported():
    b = sample_exit((0.0, PI / 2), SimConfig(dt=1e-3, n_paths=200, t_max=0.05))
    assert b.diagnostics()["truncated"] > 0
    assert np.all(np.isnan(b.tau[b.status == 1]))


@pytest.mark.parametrize("x", [(0.0, PI / 2), (0.5, 1.0), (-1.0, 2.5)])
def test_bin_integrals_closed_form(x):
    def lower(a, b, x1, x2):
        c = 1.0 / math.tan(x2 / 2)
        return (math.atan(math.tanh((x1 - a) / 2) * c) - math.atan(math.tanh((x1 - b) / 2) * c)) / PI
    e = DEFAULT_BIN_EDGES
    pt = InteriorPoint(*x)
    lo = poisson_bin_integrals(pt, "lower")
    up = poisson_bin_integrals(pt, "upper")
    for i in range(len(e) - 1):
        assert lo[i] == pytest.approx(lower(e[i], e[i + 1], x[0], x[1]), abs=1e-12)
        assert up[i] == pytest.approx(lower(e[i], e[i + 1], x[0], PI - x[1]), abs=1e-12)


def test_exit_place_histogram_small_run(centre_batch):
    h = exit_place_histogram(centre_batch)
    assert set(h["sides"]) == {"lower", "upper"}
    for side in h["sides"].values():
        rel = np.array(side["relative_error"])
        se = np.array(side["relative_standard_error"])
        assert np.all(rel < 5 * se + 0.01)


def test_empirical_exit_time_small_run(centre_batch):
    law, rep = empirical_exit_time((0.0, PI / 2), SMALL, batch=centre_batch)
    assert rep["max_gap"] < 0.02
    assert rep["median_empirical"] == pytest.approx(rep["median_exact"], rel=0.05)
    assert isinstance(law, EmpiricalLaw) and law.total == len(centre_batch)


def test_empirical_law_helpers():
    law = EmpiricalLaw.from_samples([3.0, 1.0, 2.0], edges=[0, 1.5, 4])
    assert list(law.counts) == [1, 2]
    assert law.cdf(2.0) == pytest.approx(2 / 3)
    assert law.quantile(0.5) == 2.0
    assert law.ks_distance(stats.uniform(0, 4).cdf) == pytest.approx(0.25)


def _neumann_images(t, x, y, k=20):
    g = lambda d: np.exp(-d * d / (2 * t)) / math.sqrt(2 * PI * t)
    j = np.arange(-k, k + 1)
    return float(np.sum(g(y - x + 2 * PI * j) + g(y + x + 2 * PI * j)))


@given(st.floats(0.02, 5.0), st.floats(0.0, PI), st.floats(0.0, PI))
def test_reflected_kernel_matches_images(t, x, y):
    assert float(reflected_heat_kernel(t, x, y, n_terms=200)) == pytest.approx(_neumann_images(t, x, y), abs=1e-10)


def test_reflected_marginal_law():
    t, x = 0.5, 1.0
    ys = reflected_marginal(x, t, SimConfig(dt=1e-3, n_paths=20_000, seed=5))
    assert ys.min() >= 0.0 and ys.max() <= PI
    n = np.arange(1, 200)

    def cdf(y):
        y = np.asarray(y, dtype=float)[..., None]
        s = np.sum(np.exp(-0.5 * n * n * t) * np.cos(n * x) * np.sin(n * y) / n, axis=-1)
        return (y[..., 0] + 2 * s) / PI

    assert stats.kstest(ys, cdf).pvalue > 1e-3


def test_reflected_paths_stream():
    cfg = SimConfig(dt=1e-3, horizon=5.0, chunk_steps=1000, seed=2)
    chunks = list(simulate_reflected((0.0, 1.0), cfg, n_paths=2))
    assert [c.path for c in chunks] == [0] * 5 + [1] * 5
    assert chunks[1].times[0] == pytest.approx(1.001)
    b2 = np.concatenate([c.b2 for c in chunks])
    assert b2.min() >= 0 and b2.max() <= PI
    # the occupation measure of reflected motion tends to uniform
    long = np.concatenate([c.b2 for c in simulate_reflected((0.0, 1.0), SimConfig(dt=1e-3, horizon=2000.0), 1)])
    assert np.mean(long < PI / 2) == pytest.approx(0.5, abs=0.05)
    with pytest.raises(ValueError):
        next(simulate_reflected((0.0, 4.0), cfg))


@pytest.fixture(scope="module")
def excursions():
    cfg = SimConfig(dt=1e-3, horizon=1000.0, seed=9)
    short = excursion_harvest(simulate_reflected((0.0, PI / 2), cfg, n_paths=2), 0.1, 1.0)
    cfg2 = SimConfig(dt=1e-3, horizon=2000.0, seed=9)
    long = excursion_harvest(simulate_reflected((0.0, PI / 2), cfg2, n_paths=2), 0.1, 1.0)
    return short, long


def test_harvester_contract(excursions):
    short, long = excursions
    assert len(short) > 100
    assert np.all(short.data[:, 4] >= 0.1)
    assert np.all(np.abs(short.displacement) > 1.0)
    assert np.any(~short.same_side) and np.any(short.same_side)
    assert np.all(short.data[:, 5] > 0)
    assert short.unfiltered >= len(short) and short.discarded == 4
    assert short.horizon == pytest.approx(2000.0)
    assert len(long) / len(short) == pytest.approx(2.0, rel=0.3)
    rec = short[0]
    assert abs(rec.displacement) > 1.0


def test_jump_law_fields(excursions):
    short, _ = excursions
    law = excursion_jump_law(short)
    assert law["n_same"] + law["n_cross"] == law["n_records"] == len(short)
    assert law["side_ratio_target"] == pytest.approx(1 / math.tanh(0.5))
    assert law["errors"]  # fewer records than the default minimum
    assert 0.3 < law["positive_fraction"] < 0.7
    assert law["side_ratio_relative_error"] < 0.5
    assert law["ks_same"] < 0.2 and law["ks_cross"] < 0.2


def test_harvester_validation():
    with pytest.raises(ValueError):
        ExcursionHarvester(h_min=2.0)
    with pytest.raises(ValueError):
        ExcursionHarvester(delta=0.0)


@pytest.mark.slow
def test_exit_side_bias_is_below_statistical_error():
    p = exit_probability(PI / 4, "lower")
    n = 200_000
    se = math.sqrt(p * (1 - p) / n)
    fine = sample_exit((0.0, PI / 4), SimConfig(dt=1e-4, n_paths=n, seed=21)).side_probability("lower")
    coarse = sample_exit((0.0, PI / 4), SimConfig(dt=2e-4, n_paths=n, seed=22)).side_probability("lower")
    assert abs(fine - p) < 4 * se
    assert abs(coarse - fine) < 4 * math.sqrt(2) * se
