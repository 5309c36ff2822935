"""Synthetic distributions and the Monte-Carlo experiments built on them.

The consistency experiment compares, on a few grid points, three laws of
``sqrt(n) (f - f_ref)``-type quantities:

* the bootstrap law of ``sqrt(n) (f*_b - f_n)`` from one dataset,
* the Monte-Carlo sampling law of ``sqrt(n) (f_n - f_ref)`` over fresh datasets,
* the zero-mean Gaussian law from the influence-function covariance,

where ``f_ref`` is a fit on a much larger sample standing in for the
population minimiser.  The coverage experiment checks percentile bootstrap
intervals for ``f_ref(x0)``.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ._parallel import indexed_map
from ._rng import derive_seed
from .bootstrap import bootstrap_ensemble
from .errors import ConfigError, InputError, NumericError
from .influence import asymptotic_law, build_influence_model, sample_gaussian
from .kernel import KernelSpec, as_points, pivoted_cholesky
from .law import EmpiricalLaw, bounded_lipschitz_distance, kolmogorov_distance, percentile_ci
from .loss import SmoothLoss
from .solver import Dataset, SvmFit, WeightedSample, evaluate_on_grid, fit

log = logging.getLogger(__name__)

GENERATORS = ("regression_sine_noise", "classification_gaussian_mixture")
MIN_N_REF = 10_000

# stream ids for derive_seed(master, stream, index)
_REF, _DATA, _BOOT, _MC, _GAUSS, _COV_DATA, _COV_BOOT = range(7)


@dataclass(frozen=True)
class GeneratorSpec:
    """A synthetic joint law of ``(X, Y)``.

    ``regression_sine_noise``: ``X ~ U[x_low, x_high]^dim`` (or an evenly
    spaced design when ``design="grid"``, one-dimensional only) and
    ``Y = amplitude * sin(X_1) + N(0, noise_sd^2)``.

    ``classification_gaussian_mixture``: ``Y = +1`` with probability
    ``weight`` and ``X | Y ~ N(Y * shift * e_1, spread^2 I)``.
    """

    kind: str
    dim: int = 1
    amplitude: float = 1.0
    noise_sd: float = 0.5
    x_low: float = -3.0
    x_high: float = 3.0
    design: str = "uniform"
    weight: float = 0.5
    shift: float = 1.0
    spread: float = 1.0

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise ConfigError(f"unknown generator kind {self.kind!r}", key="generator.kind")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError("dim must be a positive integer", key="generator.dim")
        numbers = [self.amplitude, self.noise_sd, self.x_low, self.x_high,
                   self.weight, self.shift, self.spread]
        if not all(np.isfinite(v) for v in numbers):
            raise ConfigError("generator parameters must be finite", key="generator")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be nonnegative", key="generator.noise_sd")
        if not self.x_low < self.x_high:
            raise ConfigError("x_low must be below x_high", key="generator.x_low")
        if self.design not in ("uniform", "grid"):
            raise ConfigError("design must be 'uniform' or 'grid'", key="generator.design")
        if self.design == "grid" and self.dim != 1:
            raise ConfigError("grid design is one-dimensional", key="generator.design")
        if not 0.0 < self.weight < 1.0:
            raise ConfigError("weight must lie in (0, 1)", key="generator.weight")
        if self.spread <= 0:
            raise ConfigError("spread must be positive", key="generator.spread")

    def regression_function(self, xs) -> np.ndarray:
        xs = as_points(xs, dim=self.dim)
        return self.amplitude * np.sin(xs[:, 0])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "GeneratorSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError("generator must be an object with a 'kind' key", key="generator")
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown generator keys {sorted(unknown)}", key="generator")
        return cls(**obj)


def generate(spec: GeneratorSpec, n: int, seed: int) -> Dataset:
    if n < 1:
        raise InputError("n must be at least 1", key="n")
    rng = np.random.Generator(np.random.PCG64(seed))
    if spec.kind == "regression_sine_noise":
        if spec.design == "grid":
            xs = np.linspace(spec.x_low, spec.x_high, n)[:, None]
        else:
            xs = rng.uniform(spec.x_low, spec.x_high, size=(n, spec.dim))
        ys = spec.regression_function(xs) + spec.noise_sd * rng.standard_normal(n)
        return Dataset(xs, ys)
    ys = np.where(rng.uniform(size=n) < spec.weight, 1.0, -1.0)
    xs = spec.spread * rng.standard_normal((n, spec.dim))
    xs[:, 0] += ys * spec.shift
    return Dataset(xs, ys)


def reference_fit(spec: GeneratorSpec, kernel: KernelSpec, loss: SmoothLoss, lam: float,
                  n_ref: int, seed: int) -> SvmFit:
    """Fit on ``n_ref`` fresh draws as a stand-in for the population minimiser."""
    if n_ref < MIN_N_REF:
        raise ConfigError(f"n_ref must be at least {MIN_N_REF}", key="n_ref")
    data = generate(spec, n_ref, seed)
    return fit(WeightedSample.uniform(data), kernel, loss, lam)


class _MonteCarloReplicate:
    def __init__(self, spec, kernel, loss, lam, n, grid, ref_values, master_seed):
        self.spec = spec
        self.kernel = kernel
        self.loss = loss
        self.lam = lam
        self.n = n
        self.grid = grid
        self.ref_values = ref_values
        self.master_seed = master_seed

    def __call__(self, m):
        data = generate(self.spec, self.n, derive_seed(self.master_seed, m))
        try:
            f = fit(WeightedSample.uniform(data), self.kernel, self.loss, self.lam)
        except NumericError as exc:
            return None, str(exc)
        return np.sqrt(self.n) * (evaluate_on_grid(f, self.grid) - self.ref_values), None


def mc_sampling_law(spec: GeneratorSpec, kernel: KernelSpec, loss: SmoothLoss, lam: float,
                    n: int, M: int, grid, f_ref: SvmFit, master_seed: int,
                    jobs: int = 1) -> EmpiricalLaw:
    """Law of ``sqrt(n) (f_n - f_ref)`` on ``grid`` over ``M`` independent datasets.

    Replicate ``m`` (1-based) draws its dataset with seed
    ``derive_seed(master_seed, m)``.  Failed fits are dropped; their count
    is stored in ``law.meta["failures"]``.
    """
    if M < 1:
        raise InputError("M must be at least 1", key="M")
    grid = as_points(grid, dim=spec.dim)
    task = _MonteCarloReplicate(spec, kernel, loss, lam, n, grid,
                                evaluate_on_grid(f_ref, grid), master_seed)
    results = indexed_map(task, range(1, M + 1), jobs=jobs)
    rows = [row for row, _ in results if row is not None]
    failures = [{"replicate": m, "error": err}
                for m, (row, err) in enumerate(results, start=1) if row is None]
    if not rows:
        raise NumericError("every Monte-Carlo fit failed", failures=len(failures))
    return EmpiricalLaw(np.array(rows), f"mc_n{n}", meta={"failures": len(failures)})


@dataclass
class ExperimentConfig:
    """Settings shared by the consistency and coverage experiments."""

    generator: GeneratorSpec
    kernel: KernelSpec
    loss: SmoothLoss
    lam: float
    seed: int
    lambda_schedule: str = "fixed"
    n_ladder: tuple = (50, 200, 800)
    B: int = 2000
    M: int = 2000
    n_ref: int = 20_000
    grid: np.ndarray = field(default_factory=lambda: np.linspace(-2.5, 2.5, 5)[:, None])
    gaussian_draws: int = 10_000
    bl_resolution: int = 1024
    n: int = 400
    R: int = 500
    level: float = 0.9
    x0: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError("lambda must be positive", key="lambda")
        if self.lambda_schedule not in ("fixed", "perturbed"):
            raise ConfigError("lambda_schedule must be 'fixed' or 'perturbed'",
                              key="lambda_schedule")
        self.n_ladder = tuple(int(v) for v in self.n_ladder)
        if not self.n_ladder:
            raise ConfigError("n_ladder must not be empty", key="n_ladder")
        if any(v < 2 for v in self.n_ladder):
            raise ConfigError("n_ladder entries must be at least 2", key="n_ladder")
        for key in ("B", "M", "R", "n", "gaussian_draws"):
            if int(getattr(self, key)) != getattr(self, key) or getattr(self, key) < 1:
                raise ConfigError(f"{key} must be a positive integer", key=key)
        if self.n_ref < MIN_N_REF:
            raise ConfigError(f"n_ref must be at least {MIN_N_REF}", key="n_ref")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie strictly between 0 and 1", key="level")
        if self.bl_resolution < 2:
            raise ConfigError("bl_resolution must be at least 2", key="bl_resolution")
        self.grid = as_points(self.grid, dim=self.generator.dim)
        if self.grid.shape[0] < 1:
            raise ConfigError("grid must contain at least one point", key="grid")
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.x0.shape != (self.generator.dim,):
            raise ConfigError("x0 must have the generator's dimension", key="x0")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer", key="seed")

    def lambda_for(self, n: int) -> float:
        return self.lam + 1.0 / n if self.lambda_schedule == "perturbed" else self.lam

    def to_dict(self) -> dict:
        return {
            "generator": self.generator.to_dict(),
            "kernel": self.kernel.to_dict(),
            "loss": self.loss.to_dict(),
            "lambda": self.lam,
            "lambda_schedule": self.lambda_schedule,
            "seed": self.seed,
            "n_ladder": list(self.n_ladder),
            "B": self.B,
            "M": self.M,
            "n_ref": self.n_ref,
            "grid": self.grid.tolist(),
            "gaussian_draws": self.gaussian_draws,
            "bl_resolution": self.bl_resolution,
            "n": self.n,
            "R": self.R,
            "level": self.level,
            "x0": self.x0.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        required = ("generator", "kernel", "loss", "lambda", "seed")
        for key in required:
            if key not in obj:
                raise ConfigError(f"missing config key {key!r}", key=key)
        known = {f.name for f in fields(cls)} - {"lam"} | {"lambda"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}", key=sorted(unknown)[0])
        obj["lam"] = obj.pop("lambda")
        obj["generator"] = GeneratorSpec.from_dict(obj["generator"])
        obj["kernel"] = KernelSpec.from_dict(obj["kernel"])
        obj["loss"] = SmoothLoss.from_dict(obj["loss"])
        return cls(**obj)


def default_regression_config(seed: int, **overrides) -> ExperimentConfig:
    base = dict(
        generator=GeneratorSpec("regression_sine_noise"),
        kernel=KernelSpec("gaussian_rbf", gamma=1.0),
        loss=SmoothLoss("logistic_regression"),
        lam=0.05,
        seed=seed,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def default_classification_config(seed: int, **overrides) -> ExperimentConfig:
    base = dict(
        generator=GeneratorSpec("classification_gaussian_mixture", dim=2),
        kernel=KernelSpec("gaussian_rbf", gamma=0.5),
        loss=SmoothLoss("logistic_classification"),
        lam=0.1,
        seed=seed,
        grid=np.column_stack([np.linspace(-2.0, 2.0, 5), np.zeros(5)]),
        x0=np.zeros(2),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass
class ExperimentReport:
    """Experiment output.  ``summary`` and ``rows`` depend only on the config;
    wall-clock ``timings`` are kept apart so reports compare byte for byte."""

    kind: str
    config: dict
    summary: dict
    header: list
    rows: list
    timings: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {"kind": self.kind, "config": self.config, "summary": self.summary}
        return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"

    def table_csv(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if isinstance(value, (np.ndarray, list, tuple)):
        return " ".join(repr(float(v)) for v in value)
    if isinstance(value, (int, np.integer, str)):
        return str(value)
    return repr(float(value))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def consistency_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Distances between bootstrap, Monte-Carlo and Gaussian laws along ``n_ladder``."""
    cfg = config
    grid = cfg.grid
    g = grid.shape[0]
    timings = {}
    summary = {"per_n": [], "seeds": {}}
    rows = []
    refs = {}

    for k, n in enumerate(cfg.n_ladder):
        lam = cfg.lambda_for(n)
        if lam not in refs:
            t0 = time.perf_counter()
            ref_seed = derive_seed(cfg.seed, _REF)
            refs[lam] = reference_fit(cfg.generator, cfg.kernel, cfg.loss, lam, cfg.n_ref, ref_seed)
            timings[f"reference_lambda_{lam!r}"] = time.perf_counter() - t0
        f_ref = refs[lam]

        t0 = time.perf_counter()
        data = generate(cfg.generator, n, derive_seed(cfg.seed, _DATA, k))
        factor = pivoted_cholesky(cfg.kernel, data.xs)
        base = fit(WeightedSample.uniform(data), cfg.kernel, cfg.loss, lam, factor=factor)
        ens = bootstrap_ensemble(data, cfg.kernel, cfg.loss, lam, cfg.B, grid,
                                 derive_seed(cfg.seed, _BOOT, k), jobs=jobs,
                                 base_fit=base, factor=factor)
        timings[f"bootstrap_n{n}"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        mc = mc_sampling_law(cfg.generator, cfg.kernel, cfg.loss, lam, n, cfg.M, grid,
                             f_ref, derive_seed(cfg.seed, _MC, k), jobs=jobs)
        timings[f"mc_n{n}"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        model = build_influence_model(base, data, grid)
        gauss_law = asymptotic_law(model, data, grid)
        gauss = sample_gaussian(gauss_law, cfg.gaussian_draws, derive_seed(cfg.seed, _GAUSS, k))
        timings[f"gaussian_n{n}"] = time.perf_counter() - t0

        metrics = {name: [] for name in (
            "ks_boot_mc", "bl_boot_mc", "ks_gauss_mc", "bl_gauss_mc", "ks_gauss_boot")}
        for j in range(g):
            boot_j = ens.scaled_draws[:, j]
            mc_j = mc.draws[:, j]
            gauss_j = gauss[:, j]
            values = {
                "ks_boot_mc": kolmogorov_distance(boot_j, mc_j),
                "bl_boot_mc": bounded_lipschitz_distance(boot_j, mc_j, cfg.bl_resolution),
                "ks_gauss_mc": kolmogorov_distance(gauss_j, mc_j),
                "bl_gauss_mc": bounded_lipschitz_distance(gauss_j, mc_j, cfg.bl_resolution),
                "ks_gauss_boot": kolmogorov_distance(gauss_j, boot_j),
            }
            for name, value in values.items():
                metrics[name].append(value)
                rows.append([n, j, grid[j], name, value])
            rows.append([n, j, grid[j], "sd_boot", float(np.std(boot_j))])
            rows.append([n, j, grid[j], "sd_mc", float(np.std(mc_j))])
            rows.append([n, j, grid[j], "sd_gauss", float(np.sqrt(gauss_law.covariance[j, j]))])
        summary["per_n"].append({
            "n": n,
            "lambda": lam,
            "bootstrap_replicates": int(ens.scaled_draws.shape[0]),
            "bootstrap_failures": len(ens.failed),
            "mc_replicates": mc.m,
            "mc_failures": mc.meta["failures"],
            "median": {name: float(np.median(v)) for name, v in metrics.items()},
            "per_grid_point": metrics,
        })
        log.info("n=%d median KS boot/mc %.4f gauss/mc %.4f", n,
                 np.median(metrics["ks_boot_mc"]), np.median(metrics["ks_gauss_mc"]))
    summary["n_ref"] = cfg.n_ref
    summary["seeds"] = {"master": cfg.seed, "reference": str(derive_seed(cfg.seed, _REF))}
    return ExperimentReport("consistency", cfg.to_dict(), summary,
                            ["n", "grid_index", "x", "metric", "value"], rows, timings)


class _CoverageRep:
    def __init__(self, cfg: ExperimentConfig, truth: float):
        self.cfg = cfg
        self.truth = truth

    def __call__(self, r):
        cfg = self.cfg
        lam = cfg.lambda_for(cfg.n)
        data = generate(cfg.generator, cfg.n, derive_seed(cfg.seed, _COV_DATA, r))
        ens = bootstrap_ensemble(data, cfg.kernel, cfg.loss, lam, cfg.B, cfg.x0[None, :],
                                 derive_seed(cfg.seed, _COV_BOOT, r))
        center = float(evaluate_on_grid(ens.base_fit, cfg.x0[None, :])[0])
        star = center + ens.scaled_draws[:, 0] / np.sqrt(cfg.n)
        lo, hi = percentile_ci(star, cfg.level)
        return lo, hi, center, len(ens.failed)


def coverage_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Empirical coverage of percentile bootstrap intervals for ``f_ref(x0)``."""
    cfg = config
    t0 = time.perf_counter()
    lam = cfg.lambda_for(cfg.n)
    f_ref = reference_fit(cfg.generator, cfg.kernel, cfg.loss, lam, cfg.n_ref,
                          derive_seed(cfg.seed, _REF))
    truth = float(evaluate_on_grid(f_ref, cfg.x0[None, :])[0])
    results = indexed_map(_CoverageRep(cfg, truth), range(1, cfg.R + 1), jobs=jobs)
    hits = np.array([lo <= truth <= hi for lo, hi, _, _ in results])
    coverage = float(hits.mean())
    se = float(np.sqrt(coverage * (1.0 - coverage) / cfg.R))
    rows = [[r, lo, hi, center, int(hit)]
            for r, ((lo, hi, center, _), hit) in enumerate(zip(results, hits), start=1)]
    summary = {
        "coverage": coverage,
        "standard_error": se,
        "nominal": cfg.level,
        "reference_value": truth,
        "mean_width": float(np.mean([hi - lo for lo, hi, _, _ in results])),
        "bootstrap_failures": int(sum(r[3] for r in results)),
        "seeds": {"master": cfg.seed},
    }
    timings = {"total": time.perf_counter() - t0}
    return ExperimentReport("coverage", cfg.to_dict(), summary,
                            ["rep", "lo", "hi", "estimate", "hit"], rows, timings)
