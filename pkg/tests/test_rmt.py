import json
import math

import numpy as np
import pytest
from scipy import integrate

from rmtsync.errors import DataError
from rmtsync.matrix import EigenDecomposition, correlation_matrix, eigen_symmetric
from rmtsync.rmt import (
    NullSimConfig,
    NullSimResult,
    cached_simulate_null,
    classify_spectrum,
    info_fraction,
    ipr,
    mp_bounds,
    mp_density,
    null_cache_path,
    null_to_json,
    participation_number,
    simulate_null,
    trial_correlation,
)

PUBLISHED_COMPONENTS = [0.22, 0.27, 0.29, 0.29, 0.23, 0.23, 0.32, 0.27,
                        0.31, 0.15, 0.31, 0.07, 0.16, 0.23, 0.25, 0.27]


@pytest.mark.parametrize(
    "n, t, expected",
    [(16, 28, 3.0833), (16, 34, 2.8426), (16, 19, 3.6774), (16, 25, 3.2400)],
)
def test_mp_bounds_published(n, t, expected):
    assert mp_bounds(n, t).lambda_max == pytest.approx(expected, abs=1e-4)


def test_mp_bounds_square():
    b = mp_bounds(10, 10)
    assert b.q == 1.0
    assert b.lambda_min == 0.0
    assert b.lambda_max == 4.0


def test_mp_bounds_rejects_q_below_one():
    with pytest.raises(DataError):
        mp_bounds(16, 15)


def test_mp_bounds_monotone_in_q():
    qs = np.linspace(1.0, 100.0, 400)
    bounds = [mp_bounds(1000, int(round(q * 1000))) for q in qs]
    hi = [b.lambda_max for b in bounds]
    lo = [b.lambda_min for b in bounds]
    assert all(b > a for a, b in zip(hi[1:], hi))
    assert all(b > a for a, b in zip(lo, lo[1:]))


def test_mp_density_support():
    b = mp_bounds(16, 28)
    assert mp_density(b.lambda_max + 0.1, b) == 0.0
    assert mp_density(b.lambda_min / 2, b) == 0.0
    assert mp_density(b.lambda_min, b) == 0.0
    assert mp_density(b.lambda_max, b) == 0.0
    assert mp_density(-1.0, b) == 0.0
    assert mp_density(1.0, b) > 0
    xs = np.linspace(-1, 5, 101)
    assert np.all(mp_density(xs, b) >= 0)


def integrate_mp(b):
    f = lambda x: mp_density(x, b)  # noqa: E731
    mid = 0.5 * (b.lambda_min + b.lambda_max)
    left, _ = integrate.quad(f, b.lambda_min, mid, limit=400)
    right, _ = integrate.quad(f, mid, b.lambda_max, limit=400)
    return left + right


@pytest.mark.parametrize("q", [1.75, 2.125, 4.0, 1.0, 10.0, 100.0])
def test_mp_density_integrates_to_one(q):
    b = mp_bounds(16, int(16 * q))
    assert b.q == q
    assert integrate_mp(b) == pytest.approx(1.0, abs=1e-3)


def test_ipr_examples():
    n = 16
    u = np.full(n, 1 / math.sqrt(n))
    assert ipr(u) == pytest.approx(1 / n, abs=1e-15)
    assert participation_number(u) == pytest.approx(n, abs=1e-12)
    e = np.zeros(n)
    e[3] = 1.0
    assert ipr(e) == 1.0
    assert participation_number(e) == 1.0


def test_ipr_rejects_unnormalized():
    with pytest.raises(DataError, match="unit norm"):
        ipr([1.0, 1.0])


def test_published_components_oracle():
    # exact sums over the two-decimal values: sum v^2 = 1.0041
    sq = sum(x * x for x in PUBLISHED_COMPONENTS)
    s4 = sum(x**4 for x in PUBLISHED_COMPONENTS)
    assert sq == pytest.approx(1.0041, abs=1e-12)
    # taken as printed
    assert ipr(PUBLISHED_COMPONENTS, tol=5e-3) == pytest.approx(s4, rel=1e-12)
    assert ipr(PUBLISHED_COMPONENTS, tol=5e-3) == pytest.approx(0.07488, abs=5e-5)
    assert participation_number(PUBLISHED_COMPONENTS, tol=5e-3) == pytest.approx(13.356, abs=1e-3)
    # rescaled to unit length first
    unit = np.array(PUBLISHED_COMPONENTS) / math.sqrt(sq)
    assert ipr(unit) == pytest.approx(s4 / sq**2, rel=1e-12)
    assert ipr(unit) == pytest.approx(0.07426, abs=5e-5)
    assert participation_number(unit) == pytest.approx(13.465, abs=1e-3)


def test_ipr_times_participation_is_one(rng):
    for n in (2, 5, 16):
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        assert ipr(v) * participation_number(v) == pytest.approx(1.0, abs=1e-12)
        assert 1.0 / n - 1e-12 <= ipr(v) <= 1.0


def test_info_fraction_examples(rng):
    assert info_fraction(eigen_symmetric(np.eye(6))) == pytest.approx(1 / 6)
    assert info_fraction(eigen_symmetric(np.ones((6, 6)))) == pytest.approx(1.0, abs=1e-12)

    f = rng.normal(size=40)
    x = f[:, None] + 0.2 * rng.normal(size=(40, 6))
    assert info_fraction(eigen_symmetric(correlation_matrix(x))) > 0.8


def test_simulate_trials_one():
    r = simulate_null(NullSimConfig(4, 10, trials=1, master_seed=99))
    assert len(r.max_eigenvalues) == 1
    assert r.empirical_max == r.max_eigenvalues[0]


def test_simulate_two_series_long():
    r = simulate_null(NullSimConfig(2, 1000, trials=100, master_seed=5))
    assert mp_bounds(2, 1000).lambda_max == pytest.approx(1.0 + 2 / math.sqrt(500) + 1 / 500)
    assert np.all((r.max_eigenvalues >= 1.0) & (r.max_eigenvalues <= 1.3))


def test_simulate_counts_recount():
    r = simulate_null(NullSimConfig(8, 12, trials=500, master_seed=1))
    assert r.count_above_theoretical == sum(1 for x in r.max_eigenvalues if x > r.theoretical.lambda_max)
    assert r.empirical_max == max(r.max_eigenvalues)


def test_simulate_deterministic_across_workers_and_chunks():
    cfg = NullSimConfig(6, 15, trials=300, master_seed=2024)
    base = null_to_json(simulate_null(cfg))
    assert null_to_json(simulate_null(cfg, chunk_size=7)) == base
    assert null_to_json(simulate_null(cfg, workers=3, chunk_size=50)) == base
    other = null_to_json(simulate_null(NullSimConfig(6, 15, trials=300, master_seed=2025)))
    assert other != base


def test_trial_trace_conserved():
    for k in range(200):
        c = trial_correlation(16, 28, 77, k)
        d = eigen_symmetric(c)
        assert abs(d.eigenvalues.sum() - 16) <= 1e-8


def test_trials_are_prefix_stable():
    short = simulate_null(NullSimConfig(5, 9, trials=40, master_seed=3))
    long = simulate_null(NullSimConfig(5, 9, trials=90, master_seed=3))
    assert short.max_eigenvalues.tobytes() == long.max_eigenvalues[:40].tobytes()


def test_null_config_validation():
    with pytest.raises(DataError):
        NullSimConfig(5, 4)
    with pytest.raises(DataError):
        NullSimConfig(1, 4)
    with pytest.raises(DataError):
        NullSimConfig(5, 5, trials=0)


def test_cache_roundtrip(tmp_path):
    cfg = NullSimConfig(4, 8, trials=50, master_seed=11)
    first = cached_simulate_null(cfg, tmp_path)
    path = null_cache_path(tmp_path, cfg)
    doc = json.loads(path.read_text())
    assert set(doc) == {"n", "t", "trials", "master_seed", "theoretical_lambda_max", "empirical_max",
                        "count_above_theoretical", "quantiles", "max_eigenvalues"}
    assert set(doc["quantiles"]) == {"p50", "p95", "p99"}
    again = cached_simulate_null(cfg, tmp_path)
    assert again.max_eigenvalues.tobytes() == first.max_eigenvalues.tobytes()
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]

    doc["count_above_theoretical"] += 1
    with pytest.raises(DataError):
        NullSimResult.from_dict(doc)
    path.write_text("{ not json")
    assert cached_simulate_null(cfg, tmp_path).max_eigenvalues.tobytes() == first.max_eigenvalues.tobytes()


def _fake_null(n, t, vmax):
    cfg = NullSimConfig(n, t, trials=3, master_seed=0)
    return NullSimResult(cfg, np.array([vmax - 0.5, vmax, vmax - 0.2]), mp_bounds(n, t))


def _spectrum(values):
    n = len(values)
    return EigenDecomposition(np.array(values, float), np.eye(n))


def test_classify_published_floating_rate_case():
    eig = [6.76, 2.60] + [0.4] * 14
    rep = classify_spectrum(_spectrum(eig), mp_bounds(16, 34), _fake_null(16, 34, 3.35))
    top, second = rep.flags[0], rep.flags[1]
    assert top.above_theoretical and top.above_simulated and not top.within_noise_band
    assert not second.above_theoretical and not second.above_simulated and second.within_noise_band
    assert rep.simulated_max == 3.35
    assert rep.info_fraction == pytest.approx(6.76 / 16)


def test_classify_identity_all_noise():
    b = mp_bounds(5, 40)
    assert b.lambda_min < 1 < b.lambda_max
    rep = classify_spectrum(eigen_symmetric(np.eye(5)), b)
    assert all(f.within_noise_band and not f.above_theoretical for f in rep.flags)
    assert all(f.above_simulated is None for f in rep.flags)
    np.testing.assert_allclose(rep.participation_number, 1.0)


def test_classify_between_theory_and_simulation():
    rep = classify_spectrum(_spectrum([3.0] + [0.8] * 15), mp_bounds(16, 34), _fake_null(16, 34, 3.35))
    f = rep.flags[0]
    assert f.above_theoretical and not f.above_simulated and f.within_noise_band


def test_classify_dimension_mismatch():
    with pytest.raises(DataError):
        classify_spectrum(eigen_symmetric(np.eye(4)), mp_bounds(5, 10))
    with pytest.raises(DataError):
        classify_spectrum(eigen_symmetric(np.eye(5)), mp_bounds(5, 10), _fake_null(5, 11, 3.0))


@pytest.mark.slow
@pytest.mark.parametrize("n, t", [(16, 28), (16, 34), (16, 25), (16, 19)])
def test_small_sample_bias_direction(n, t):
    r = simulate_null(NullSimConfig(n, t, trials=10_000, master_seed=20080301))
    frac = r.count_above_theoretical / 10_000
    assert 0.0 < frac < 0.10
    assert r.empirical_max > r.theoretical.lambda_max
