import numpy as np
import pytest

from svmboot.errors import ConfigError, InputError
from svmboot.law import (
    EmpiricalLaw,
    bounded_lipschitz_distance,
    kolmogorov_distance,
    percentile_ci,
    quantile,
    read_table,
)


def test_kolmogorov_examples(rng):
    a = rng.normal(size=50)
    assert kolmogorov_distance(a, a) == 0.0
    assert kolmogorov_distance(-1 - rng.uniform(size=9), 2 + rng.uniform(size=4)) == 1.0
    assert kolmogorov_distance([0.0, 1.0], [0.5]) == 0.5


def test_kolmogorov_against_brute_force(rng):
    for _ in range(20):
        a = np.round(rng.normal(size=rng.integers(1, 30)), 1)
        b = np.round(rng.normal(0.3, 1.2, size=rng.integers(1, 30)), 1)
        ts = np.concatenate([a, b, a - 1e-9, b - 1e-9])
        brute = max(abs(np.mean(a <= t) - np.mean(b <= t)) for t in ts)
        assert kolmogorov_distance(a, b) == pytest.approx(brute, abs=1e-15)


def test_kolmogorov_is_a_metric(rng):
    for _ in range(100):
        a, b, c = (rng.normal(rng.normal(), 1, rng.integers(1, 40)) for _ in range(3))
        assert kolmogorov_distance(a, b) == kolmogorov_distance(b, a)
        assert kolmogorov_distance(a, c) <= (
            kolmogorov_distance(a, b) + kolmogorov_distance(b, c) + 1e-12
        )
        assert 0.0 <= kolmogorov_distance(a, b) <= 1.0


def test_empty_law_rejected():
    with pytest.raises(InputError):
        kolmogorov_distance([], [1.0])
    with pytest.raises(InputError):
        EmpiricalLaw([1.0, np.inf])


def test_bl_examples(rng):
    a = rng.normal(size=30)
    assert bounded_lipschitz_distance(a, a) == 0.0
    assert bounded_lipschitz_distance([0.0], [0.3]) == pytest.approx(0.3, abs=1e-15)
    assert bounded_lipschitz_distance([0.0], [7.0]) == 1.0


def test_bl_dense_integration_oracle(rng):
    for _ in range(5):
        a = rng.normal(0, 0.1, 100)
        b = rng.normal(0.05, 0.12, 100)
        lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
        edges = np.linspace(lo, hi, 1_000_001)
        mids = 0.5 * (edges[1:] + edges[:-1])
        fa = np.searchsorted(np.sort(a), mids, side="right") / a.size
        fb = np.searchsorted(np.sort(b), mids, side="right") / b.size
        dense = np.sum(np.abs(fa - fb)) * (edges[1] - edges[0])
        assert bounded_lipschitz_distance(a, b, 1024) == pytest.approx(dense, abs=1e-6)


def test_bl_resolution():
    with pytest.raises(ConfigError):
        bounded_lipschitz_distance([0.0], [1.0], grid_resolution=1)
    a, b = [0.0, 0.2, 0.9], [0.1, 0.5]
    values = [bounded_lipschitz_distance(a, b, r) for r in (2, 10, 1000)]
    assert values[0] == pytest.approx(values[1], abs=1e-15) == pytest.approx(values[2], abs=1e-15)


def test_bl_bounded_by_kolmogorov_times_diameter(rng):
    for _ in range(100):
        a = rng.normal(0, rng.uniform(0.1, 3), rng.integers(1, 50))
        b = rng.normal(rng.normal(), rng.uniform(0.1, 3), rng.integers(1, 50))
        diam = max(a.max(), b.max()) - min(a.min(), b.min())
        bl = bounded_lipschitz_distance(a, b)
        assert bl <= min(1.0, kolmogorov_distance(a, b) * diam) + 1e-12
        assert bl == pytest.approx(bounded_lipschitz_distance(b, a), abs=1e-14)


def test_percentile_examples():
    assert percentile_ci(np.full(10, 2.5), 0.9) == (2.5, 2.5)
    lo, hi = percentile_ci(np.arange(1.0, 101.0), 0.9)
    # positions (m - 1) q = 4.95 and 94.05 between order statistics 5,6 and 95,96
    assert lo == pytest.approx(5.95, abs=1e-12)
    assert hi == pytest.approx(95.05, abs=1e-12)


def test_percentile_symmetric_law(rng):
    draws = rng.standard_normal(10_000)
    lo, hi = percentile_ci(draws, 0.9)
    assert abs(lo + hi) <= 2 * 0.05 * (draws.max() - draws.min())


def test_percentile_errors():
    for level in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ConfigError):
            percentile_ci([1.0, 2.0], level)
    with pytest.raises(InputError):
        percentile_ci([1.0], 0.9)


def test_percentile_nesting(rng):
    draws = rng.exponential(size=333)
    levels = np.linspace(0.05, 0.99, 30)
    cis = [percentile_ci(draws, lv) for lv in levels]
    for (lo1, hi1), (lo2, hi2) in zip(cis, cis[1:]):
        assert lo2 <= lo1 <= hi1 <= hi2


def test_quantile_examples(rng):
    a = rng.normal(size=17)
    assert quantile(a, 0.0) == a.min()
    assert quantile(a, 1.0) == a.max()
    assert quantile([1.0, 2.0, 3.0, 4.0], 0.5) == 2.5
    with pytest.raises(ConfigError):
        quantile(a, 1.01)


def test_quantile_monotone(rng):
    qs = np.linspace(0, 1, 21)
    for _ in range(100):
        a = rng.standard_cauchy(rng.integers(1, 60))
        values = [quantile(a, q) for q in qs]
        assert np.all(np.diff(values) >= 0)


def test_law_accepts_and_rejects_shapes():
    law = EmpiricalLaw(np.zeros((4, 3)), "grid")
    assert law.m == 4 and not law.is_scalar
    assert law.marginal(1).is_scalar
    with pytest.raises(InputError):
        kolmogorov_distance(law, law)
    with pytest.raises(InputError):
        EmpiricalLaw(np.zeros((2, 2, 2)))


@pytest.mark.parametrize("shape", [(7,), (7, 3)])
def test_csv_round_trip(tmp_path, rng, shape):
    law = EmpiricalLaw(rng.normal(size=shape), "draws")
    law.save(tmp_path / "law.csv")
    back = EmpiricalLaw.load(tmp_path / "law.csv")
    np.testing.assert_array_equal(back.draws, law.draws)
    header, _ = read_table(tmp_path / "law.csv")
    assert header == (["draws"] if len(shape) == 1 else ["grid_0", "grid_1", "grid_2"])
    assert "\r" not in (tmp_path / "law.csv").read_text()
