"""Command-line entry point: ``svmboot COMMAND --config PATH --seed INT --out DIR``.

Exit codes: 0 ok, 2 config error, 3 numeric/convergence error, 4 I/O error.
Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import harness
from ._rng import derive_seed
from .bootstrap import bootstrap_ensemble
from .errors import ConfigError, SvmBootError
from .influence import asymptotic_law, build_influence_model, sample_gaussian
from .kernel import KernelSpec, as_points
from .law import read_table, write_table
from .loss import SmoothLoss
from .solver import Dataset, WeightedSample, evaluate_on_grid, fit

log = logging.getLogger("svmboot")

COMMANDS = ("fit", "bootstrap", "influence", "mc-law", "consistency", "coverage")
EXPERIMENTS = ("consistency", "coverage")

_MODEL_KEYS = {"command", "kernel", "loss", "lambda"}
_DATA_KEYS = {"generator", "n", "data"}
ALLOWED_KEYS = {
    "fit": _MODEL_KEYS | _DATA_KEYS | {"grid"},
    "bootstrap": _MODEL_KEYS | _DATA_KEYS | {"grid", "B"},
    "influence": _MODEL_KEYS | _DATA_KEYS | {"grid", "gaussian_draws"},
    "mc-law": _MODEL_KEYS | {"generator", "n", "M", "grid", "n_ref"},
    "consistency": _MODEL_KEYS | {
        "generator", "lambda_schedule", "n_ladder", "B", "M", "n_ref", "grid",
        "gaussian_draws", "bl_resolution",
    },
    "coverage": _MODEL_KEYS | {
        "generator", "lambda_schedule", "n", "B", "R", "n_ref", "level", "x0",
    },
}


@dataclass
class RunConfig:
    command: str
    raw: dict
    seed: int | None
    jobs: int = 1
    output_dir: Path = field(default_factory=lambda: Path("out"))

    @classmethod
    def build(cls, command: str, raw: dict, seed, jobs, output_dir) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}", key="command")
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", key="config")
        if raw.get("command", command) != command:
            raise ConfigError(
                f"config is for {raw['command']!r}, not {command!r}", key="command"
            )
        if "seed" in raw:
            raise ConfigError("seeds come from --seed only", key="seed")
        unknown = sorted(set(raw) - ALLOWED_KEYS[command])
        if unknown:
            raise ConfigError(
                f"config key {unknown[0]!r} is not used by {command!r}", key=unknown[0]
            )
        for key in ("kernel", "loss", "lambda"):
            if key not in raw:
                raise ConfigError(f"missing config key {key!r}", key=key)
        needs_seed = command in ("bootstrap", "mc-law", *EXPERIMENTS) or "data" not in raw
        if seed is None and needs_seed:
            raise ConfigError(f"--seed is required for {command!r}", key="seed")
        if jobs < 1:
            raise ConfigError("--jobs must be at least 1", key="jobs")
        if "data" in raw and "generator" in raw:
            raise ConfigError("give either 'data' or 'generator', not both", key="data")
        if command in ("fit", "bootstrap", "influence") and not (
            "data" in raw or "generator" in raw
        ):
            raise ConfigError("config needs 'data' or 'generator'", key="data")
        if "data" in raw and not Path(raw["data"]).is_file():
            raise ConfigError(f"data file {raw['data']!r} does not exist", key="data")
        if "generator" in raw and command in ("fit", "bootstrap", "influence", "mc-law") \
                and "n" not in raw:
            raise ConfigError("config needs 'n' with a generator", key="n")
        # construct every component now so bad values fail before any compute
        KernelSpec.from_dict(raw["kernel"])
        SmoothLoss.from_dict(raw["loss"])
        if command in EXPERIMENTS:
            experiment_config(raw, seed)
        else:
            lam = raw["lambda"]
            if not isinstance(lam, (int, float)) or not lam > 0:
                raise ConfigError("lambda must be positive", key="lambda")
            if "generator" in raw:
                harness.GeneratorSpec.from_dict(raw["generator"])
            for key in ("n", "B", "M", "gaussian_draws"):
                if key in raw and (not isinstance(raw[key], int) or raw[key] < 0
                                   or (key != "B" and raw[key] < 1)):
                    raise ConfigError(f"{key} must be a positive integer", key=key)
        return cls(command, raw, seed, jobs, Path(output_dir))


def experiment_config(raw: dict, seed) -> harness.ExperimentConfig:
    body = {k: v for k, v in raw.items() if k != "command"}
    body["seed"] = seed
    return harness.ExperimentConfig.from_dict(body)


def load_dataset(path) -> Dataset:
    header, rows = read_table(path)
    if not header or header[-1] != "y":
        raise ConfigError("data CSV needs input columns followed by a 'y' column", key="data")
    return Dataset(rows[:, :-1], rows[:, -1])


def _components(raw):
    return (KernelSpec.from_dict(raw["kernel"]), SmoothLoss.from_dict(raw["loss"]),
            float(raw["lambda"]))


def _dataset(cfg: RunConfig) -> Dataset:
    raw = cfg.raw
    if "data" in raw:
        return load_dataset(raw["data"])
    spec = harness.GeneratorSpec.from_dict(raw["generator"])
    return harness.generate(spec, int(raw["n"]), derive_seed(cfg.seed, 0))


def _grid(raw, dim):
    if "grid" not in raw:
        return None
    return as_points(raw["grid"], dim=dim)


def _dump(path, obj):
    Path(path).write_text(json.dumps(harness._plain(obj), indent=2, sort_keys=True) + "\n")


def run(cfg: RunConfig, stage: Path) -> list[str]:
    """Execute ``cfg`` writing artifacts into ``stage``; return summary lines."""
    raw = cfg.raw
    kernel, loss, lam = _components(raw)
    lines = []

    if cfg.command == "fit":
        data = _dataset(cfg)
        result = fit(WeightedSample.uniform(data), kernel, loss, lam)
        _dump(stage / "fit.json", result.to_dict())
        lines.append(f"fit objective={result.objective!r} iterations={result.n_iter}")
        grid = _grid(raw, data.dim)
        if grid is not None:
            values = evaluate_on_grid(result, grid)
            write_table(stage / "predictions.csv", np.column_stack([grid, values]),
                        [f"x_{j}" for j in range(data.dim)] + ["f"])

    elif cfg.command == "bootstrap":
        data = _dataset(cfg)
        grid = _grid(raw, data.dim)
        if grid is None:
            grid = data.xs
        ens = bootstrap_ensemble(data, kernel, loss, lam, int(raw.get("B", 1000)), grid,
                                 derive_seed(cfg.seed, 2), jobs=cfg.jobs)
        ens.save(stage / "bootstrap_draws.csv", stage / "bootstrap.json")
        sd = ens.scaled_draws.std(axis=0) if len(ens.scaled_draws) else np.zeros(len(grid))
        lines.append(f"bootstrap replicates={len(ens.scaled_draws)} failures={len(ens.failed)}")
        lines.append(f"bootstrap max_sd={float(sd.max()) if sd.size else 0.0!r}")

    elif cfg.command == "influence":
        data = _dataset(cfg)
        grid = _grid(raw, data.dim)
        if grid is None:
            grid = data.xs
        base = fit(WeightedSample.uniform(data), kernel, loss, lam)
        model = build_influence_model(base, data, grid)
        law = asymptotic_law(model, data, grid)
        law.save(stage / "asymptotic_law.json")
        lines.append(f"influence max_variance={float(np.diag(law.covariance).max())!r}")
        draws = raw.get("gaussian_draws")
        if draws:
            sample = sample_gaussian(law, int(draws), derive_seed(cfg.seed, 4))
            write_table(stage / "gaussian_draws.csv", sample,
                        [f"grid_{j}" for j in range(grid.shape[0])])

    elif cfg.command == "mc-law":
        spec = harness.GeneratorSpec.from_dict(raw["generator"])
        n_ref = int(raw.get("n_ref", 20_000))
        f_ref = harness.reference_fit(spec, kernel, loss, lam, n_ref,
                                      derive_seed(cfg.seed, 0))
        grid = _grid(raw, spec.dim)
        if grid is None:
            grid = np.linspace(spec.x_low, spec.x_high, 5)[:, None]
        law = harness.mc_sampling_law(spec, kernel, loss, lam, int(raw["n"]),
                                      int(raw.get("M", 1000)), grid, f_ref,
                                      derive_seed(cfg.seed, 3), jobs=cfg.jobs)
        law.save(stage / "mc_law.csv")
        _dump(stage / "mc_law.json", {"n": int(raw["n"]), "n_ref": n_ref, "grid": grid,
                                      "failures": law.meta["failures"], "draws": law.m})
        lines.append(f"mc-law draws={law.m} failures={law.meta['failures']}")

    else:
        exp = experiment_config(raw, cfg.seed)
        if cfg.command == "consistency":
            report = harness.consistency_experiment(exp, jobs=cfg.jobs)
            table = "distances.csv"
            for entry in report.summary["per_n"]:
                for metric, value in sorted(entry["median"].items()):
                    lines.append(f"consistency n={entry['n']} median_{metric}={value:.6f}")
        else:
            report = harness.coverage_experiment(exp, jobs=cfg.jobs)
            table = "coverage.csv"
            s = report.summary
            lines.append(f"coverage rate={s['coverage']:.6f} se={s['standard_error']:.6f} "
                         f"nominal={s['nominal']}")
        (stage / "report.json").write_text(report.to_json())
        (stage / table).write_text(report.table_csv())
        _dump(stage / "timings.json", report.timings)
    return lines


def _publish(stage: Path, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for item in sorted(stage.iterdir()):
        os.replace(item, out / item.name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svmboot",
        description="Bootstrap and influence-function analysis of kernel machines.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "fit": "fit one kernel machine and write fit.json",
        "bootstrap": "bootstrap a fit and write scaled replicate draws",
        "influence": "estimate the Gaussian limit law from influence functions",
        "mc-law": "Monte-Carlo sampling law against a large-sample reference fit",
        "consistency": "compare bootstrap, Monte-Carlo and Gaussian laws along an n-ladder",
        "coverage": "coverage study of percentile bootstrap intervals",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
        p.add_argument("--seed", type=int, metavar="INT", help="master seed for all randomness")
        p.add_argument("--jobs", type=int, default=1, metavar="INT",
                       help="worker processes (results do not depend on it)")
        p.add_argument("--out", default="out", metavar="DIR", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true", help="log each stage")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        try:
            raw = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", key="config") from exc
        cfg = RunConfig.build(args.command, raw, args.seed, args.jobs, out)
        out.parent.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".svmboot-", dir=out.parent))
        try:
            lines = run(cfg, stage)
            _publish(stage, out)
        finally:
            shutil.rmtree(stage, ignore_errors=True)
    except SvmBootError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "IOError", "message": str(exc)}), file=sys.stderr)
        return 4
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
