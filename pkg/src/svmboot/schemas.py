"""JSON Schemas (draft 2020-12) of the JSON artifacts written by the CLI.

They are plain dictionaries so the package does not depend on a validator;
any JSON Schema implementation can check an output directory against them.
CSV artifacts are described by their header only (see ``CSV_HEADERS``).
"""

_number = {"type": "number"}
_int = {"type": "integer", "minimum": 0}
_points = {"type": "array", "items": {"type": "array", "items": _number, "minItems": 1}}
_vector = {"type": "array", "items": _number}

KERNEL = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["gaussian_rbf", "polynomial", "linear"]},
        "gamma": _number,
        "degree": {"type": "integer", "minimum": 1},
        "offset": _number,
    },
    "additionalProperties": False,
}

LOSS = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["logistic_classification", "logistic_regression",
                            "huber", "smoothed_hinge"]},
        "delta": _number,
        "eps": _number,
    },
    "additionalProperties": False,
}

FIT = {
    "type": "object",
    "required": ["support_points", "alpha", "lambda", "kernel", "loss",
                 "objective", "grad_norm", "n_iter"],
    "properties": {
        "support_points": _points,
        "alpha": _vector,
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "kernel": KERNEL,
        "loss": LOSS,
        "objective": _number,
        "grad_norm": _number,
        "n_iter": _int,
    },
    "additionalProperties": False,
}

BOOTSTRAP = {
    "type": "object",
    "required": ["master_seed", "n", "B", "replicate_index", "seeds", "failed", "grid",
                 "base_fit"],
    "properties": {
        "master_seed": _int,
        "n": {"type": "integer", "minimum": 1},
        "B": _int,
        "replicate_index": {"type": "array", "items": _int},
        # 64-bit seeds are strings so that every JSON reader keeps them exact
        "seeds": {"type": "array", "items": {"type": "string", "pattern": "^[0-9]+$"}},
        "failed": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["replicate", "error"],
                "properties": {"replicate": _int, "error": {"type": "string"}},
            },
        },
        "grid": _points,
        "base_fit": FIT,
    },
    "additionalProperties": False,
}

ASYMPTOTIC_LAW = {
    "type": "object",
    "required": ["grid", "covariance", "mean", "basis"],
    "properties": {
        "grid": _points,
        "covariance": {"type": "array", "items": _vector},
        "mean": _vector,
        "basis": {
            "type": "object",
            "required": ["representation_points", "training_points", "lambda",
                         "kernel", "loss"],
            "properties": {
                "representation_points": _int,
                "training_points": _int,
                "lambda": _number,
                "kernel": KERNEL,
                "loss": LOSS,
            },
        },
    },
    "additionalProperties": False,
}

MC_LAW = {
    "type": "object",
    "required": ["n", "n_ref", "grid", "failures", "draws"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "n_ref": {"type": "integer", "minimum": 10_000},
        "grid": _points,
        "failures": _int,
        "draws": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_unit = {"type": "number", "minimum": 0, "maximum": 1}
_METRICS = ["ks_boot_mc", "bl_boot_mc", "ks_gauss_mc", "bl_gauss_mc", "ks_gauss_boot"]

CONSISTENCY_REPORT = {
    "type": "object",
    "required": ["kind", "config", "summary"],
    "properties": {
        "kind": {"const": "consistency"},
        "config": {"type": "object"},
        "summary": {
            "type": "object",
            "required": ["per_n", "seeds", "n_ref"],
            "properties": {
                "n_ref": _int,
                "seeds": {"type": "object", "required": ["master"]},
                "per_n": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["n", "lambda", "bootstrap_replicates",
                                     "bootstrap_failures", "mc_replicates", "mc_failures",
                                     "median", "per_grid_point"],
                        "properties": {
                            "n": {"type": "integer", "minimum": 2},
                            "lambda": _number,
                            "bootstrap_replicates": _int,
                            "bootstrap_failures": _int,
                            "mc_replicates": _int,
                            "mc_failures": _int,
                            "median": {
                                "type": "object",
                                "required": _METRICS,
                                "additionalProperties": _unit,
                            },
                            "per_grid_point": {
                                "type": "object",
                                "required": _METRICS,
                                "additionalProperties": {"type": "array", "items": _unit},
                            },
                        },
                    },
                },
            },
        },
    },
    "additionalProperties": False,
}

COVERAGE_REPORT = {
    "type": "object",
    "required": ["kind", "config", "summary"],
    "properties": {
        "kind": {"const": "coverage"},
        "config": {"type": "object"},
        "summary": {
            "type": "object",
            "required": ["coverage", "standard_error", "nominal", "reference_value",
                         "mean_width", "bootstrap_failures", "seeds"],
            "properties": {
                "coverage": _unit,
                "standard_error": {"type": "number", "minimum": 0},
                "nominal": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "reference_value": _number,
                "mean_width": {"type": "number", "minimum": 0},
                "bootstrap_failures": _int,
                "seeds": {"type": "object", "required": ["master"]},
            },
        },
    },
    "additionalProperties": False,
}

TIMINGS = {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}}

#: JSON schema per artifact file name, keyed by command.
ARTIFACTS = {
    "fit": {"fit.json": FIT},
    "bootstrap": {"bootstrap.json": BOOTSTRAP},
    "influence": {"asymptotic_law.json": ASYMPTOTIC_LAW},
    "mc-law": {"mc_law.json": MC_LAW},
    "consistency": {"report.json": CONSISTENCY_REPORT, "timings.json": TIMINGS},
    "coverage": {"report.json": COVERAGE_REPORT, "timings.json": TIMINGS},
}

CSV_HEADERS = {
    "predictions.csv": "x_0..x_{d-1}, f",
    "bootstrap_draws.csv": "grid_0..grid_{g-1}",
    "gaussian_draws.csv": "grid_0..grid_{g-1}",
    "mc_law.csv": "grid_0..grid_{g-1}",
    "distances.csv": "n, grid_index, x, metric, value",
    "coverage.csv": "rep, lo, hi, estimate, hit",
}
