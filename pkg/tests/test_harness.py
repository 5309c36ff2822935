import numpy as np
import pytest

from conftest import LOGREG
from svmboot.bootstrap import bootstrap_ensemble
from svmboot.errors import ConfigError, InputError
from svmboot.harness import (
    ExperimentConfig,
    GeneratorSpec,
    consistency_experiment,
    coverage_experiment,
    default_classification_config,
    default_regression_config,
    generate,
    mc_sampling_law,
    reference_fit,
)
from svmboot.kernel import KernelSpec
from svmboot.law import kolmogorov_distance
from svmboot.solver import Dataset, WeightedSample, evaluate_on_grid, fit

SINE = GeneratorSpec("regression_sine_noise")
RBF = KernelSpec("gaussian_rbf", gamma=1.0)
GRID = np.linspace(-2.5, 2.5, 5)[:, None]


def small_regression(seed=5, **overrides):
    base = dict(n_ladder=(50,), B=100, M=100, n_ref=10_000, gaussian_draws=1000,
                n=100, R=20)
    base.update(overrides)
    return default_regression_config(seed, **base)


def test_noise_free_grid_design_is_exact():
    spec = GeneratorSpec("regression_sine_noise", amplitude=2.0, noise_sd=0.0, design="grid")
    data = generate(spec, 11, 1)
    np.testing.assert_array_equal(data.xs[:, 0], np.linspace(-3, 3, 11))
    np.testing.assert_array_equal(data.ys, 2.0 * np.sin(data.xs[:, 0]))


def test_mixture_class_frequencies():
    spec = GeneratorSpec("classification_gaussian_mixture", dim=2, weight=0.3)
    data = generate(spec, 10_000, 8)
    assert abs(np.mean(data.ys == 1.0) - 0.3) <= 0.02
    assert set(np.unique(data.ys)) == {-1.0, 1.0}
    # class-conditional means sit at +-shift on the first axis
    assert abs(data.xs[data.ys == 1, 0].mean() - 1.0) <= 0.1
    assert abs(data.xs[data.ys == -1, 1].mean()) <= 0.1


def test_generate_is_deterministic():
    a, b = generate(SINE, 30, 4), generate(SINE, 30, 4)
    np.testing.assert_array_equal(a.xs, b.xs)
    np.testing.assert_array_equal(a.ys, b.ys)
    assert not np.array_equal(a.xs, generate(SINE, 30, 5).xs)


@pytest.mark.parametrize("kwargs", [
    {"kind": "nope"}, {"noise_sd": -1.0}, {"x_low": 1.0, "x_high": 1.0},
    {"amplitude": np.nan}, {"design": "grid", "dim": 2}, {"dim": 0},
])
def test_invalid_generator(kwargs):
    kwargs = {"kind": "regression_sine_noise", **kwargs}
    with pytest.raises(ConfigError):
        GeneratorSpec(**kwargs)


def test_generator_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        GeneratorSpec.from_dict({"kind": "regression_sine_noise", "sd": 1})
    assert GeneratorSpec.from_dict(SINE.to_dict()) == SINE


def test_generate_needs_positive_n():
    with pytest.raises(InputError):
        generate(SINE, 0, 1)


def test_noise_free_reference_recovers_sine():
    spec = GeneratorSpec("regression_sine_noise", noise_sd=0.0)
    f_ref = reference_fit(spec, RBF, LOGREG, 1e-6, 10_000, 3)
    grid = np.linspace(-2.8, 2.8, 57)[:, None]
    mse = np.mean((evaluate_on_grid(f_ref, grid) - np.sin(grid[:, 0])) ** 2)
    assert mse <= 1e-2


def test_reference_fit_stability():
    a = reference_fit(SINE, RBF, LOGREG, 0.05, 20_000, 101)
    b = reference_fit(SINE, RBF, LOGREG, 0.05, 20_000, 202)
    grid = np.linspace(-3, 3, 61)[:, None]
    assert np.max(np.abs(evaluate_on_grid(a, grid) - evaluate_on_grid(b, grid))) <= 0.05


def test_reference_fit_heavy_regularisation():
    f_ref = reference_fit(SINE, RBF, LOGREG, 1e6, 10_000, 3)
    assert np.max(np.abs(evaluate_on_grid(f_ref, GRID))) <= 1e-2


def test_reference_fit_needs_large_sample():
    with pytest.raises(ConfigError):
        reference_fit(SINE, RBF, LOGREG, 0.05, 9_999, 3)


@pytest.fixture(scope="module")
def f_ref():
    return reference_fit(SINE, RBF, LOGREG, 0.05, 10_000, 1)


def test_mc_single_replicate(f_ref):
    from svmboot._rng import derive_seed

    law = mc_sampling_law(SINE, RBF, LOGREG, 0.05, 40, 1, GRID, f_ref, 9)
    data = generate(SINE, 40, derive_seed(9, 1))
    direct = fit(WeightedSample.uniform(data), RBF, LOGREG, 0.05)
    expected = np.sqrt(40) * (evaluate_on_grid(direct, GRID) - evaluate_on_grid(f_ref, GRID))
    assert law.draws.shape == (1, 5)
    np.testing.assert_allclose(law.draws[0], expected, rtol=0, atol=1e-12)
    assert law.meta["failures"] == 0


def test_mc_deterministic(f_ref):
    a = mc_sampling_law(SINE, RBF, LOGREG, 0.05, 30, 20, GRID, f_ref, 9)
    b = mc_sampling_law(SINE, RBF, LOGREG, 0.05, 30, 20, GRID, f_ref, 9, jobs=2)
    assert a.draws.tobytes() == b.draws.tobytes()


def test_mc_needs_replicates(f_ref):
    with pytest.raises(InputError):
        mc_sampling_law(SINE, RBF, LOGREG, 0.05, 30, 0, GRID, f_ref, 9)


@pytest.mark.slow
def test_mc_law_is_centred():
    # f_ref noise at n_ref = 2e4 is about 0.14 sd on this scale, twice the
    # 3 sd / sqrt(M) bound, so the reference here uses a larger sample
    ref = reference_fit(SINE, RBF, LOGREG, 0.05, 200_000, 1)
    law = mc_sampling_law(SINE, RBF, LOGREG, 0.05, 400, 2000, GRID, ref, 11)
    bound = 3 * law.draws.std(axis=0, ddof=1) / np.sqrt(law.m)
    assert np.all(np.abs(law.draws.mean(axis=0)) <= bound)


def test_degenerate_dataset_bootstrap_law(rbf):
    data = Dataset(np.full((20, 1), 0.5), np.full(20, 0.2))
    ens = bootstrap_ensemble(data, rbf, LOGREG, 0.05, 50, GRID, 1)
    np.testing.assert_allclose(ens.scaled_draws, 0.0, atol=1e-12)
    law = np.round(ens.scaled_draws[:, 0], 9)
    assert np.all(law == 0.0)
    assert kolmogorov_distance(law, law) == 0.0


def test_small_consistency_report():
    report = consistency_experiment(small_regression(n_ladder=(50, 100)))
    assert [p["n"] for p in report.summary["per_n"]] == [50, 100]
    for entry in report.summary["per_n"]:
        for values in entry["per_grid_point"].values():
            assert len(values) == 5
            assert all(0.0 <= v <= 1.0 and np.isfinite(v) for v in values)
        assert entry["bootstrap_replicates"] == 100 and entry["mc_replicates"] == 100
    assert len(report.rows) == 2 * 5 * 8
    assert report.table_csv().splitlines()[0] == "n,grid_index,x,metric,value"


def test_consistency_classification_runs():
    cfg = default_classification_config(3, n_ladder=(40,), B=30, M=30, n_ref=10_000,
                                        gaussian_draws=200)
    report = consistency_experiment(cfg)
    assert report.summary["per_n"][0]["median"]["ks_boot_mc"] <= 1.0


def test_consistency_reproducible_across_jobs():
    cfg = small_regression(B=40, M=40)
    a = consistency_experiment(cfg, jobs=1)
    b = consistency_experiment(cfg, jobs=2)
    assert a.to_json() == b.to_json()
    assert a.table_csv() == b.table_csv()


def test_perturbed_lambda_schedule():
    cfg = small_regression(lambda_schedule="perturbed", B=20, M=20)
    report = consistency_experiment(cfg)
    assert report.summary["per_n"][0]["lambda"] == pytest.approx(0.05 + 1 / 50)


def test_small_coverage_report():
    report = coverage_experiment(small_regression(B=50, R=12))
    summary = report.summary
    assert 0.0 <= summary["coverage"] <= 1.0
    assert summary["standard_error"] == pytest.approx(
        np.sqrt(summary["coverage"] * (1 - summary["coverage"]) / 12))
    for rep, lo, hi, estimate, hit in report.rows:
        assert lo <= hi
        assert hit == int(lo <= summary["reference_value"] <= hi)
    again = coverage_experiment(small_regression(B=50, R=12), jobs=2)
    assert again.to_json() == report.to_json()


@pytest.mark.parametrize("overrides, key", [
    ({"n_ladder": ()}, "n_ladder"),
    ({"level": 1.0}, "level"),
    ({"level": 0.0}, "level"),
    ({"B": 0}, "B"),
    ({"R": 0}, "R"),
    ({"lam": -1.0}, "lambda"),
    ({"n_ref": 100}, "n_ref"),
    ({"lambda_schedule": "random"}, "lambda_schedule"),
])
def test_invalid_experiment_config(overrides, key):
    with pytest.raises(ConfigError) as info:
        small_regression(**overrides)
    assert info.value.details["key"] == key


def test_config_dict_round_trip():
    cfg = small_regression()
    back = ExperimentConfig.from_dict(cfg.to_dict())
    assert back.to_dict() == cfg.to_dict()
    bad = cfg.to_dict()
    bad["typo"] = 1
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(bad)
    assert info.value.details["key"] == "typo"
