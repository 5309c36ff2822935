"""Efron's bootstrap of the kernel machine via multinomial reweighting.

Resampling ``n`` points with replacement is the same probability measure as
putting weight ``M_i / n`` on the original point ``i``, where
``M ~ Multinomial(n; 1/n, ..., 1/n)``.  Replicates are therefore fitted on
the original support points with those weights, and all share one Gram
factor.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._parallel import indexed_map
from ._rng import derive_seed
from .errors import InputError, NumericError
from .kernel import KernelSpec, as_points, pivoted_cholesky
from .law import write_table
from .loss import SmoothLoss
from .solver import Dataset, SvmFit, WeightedSample, fit

log = logging.getLogger(__name__)

#: Largest tolerated fraction of failed replicate fits.
MAX_FAILURE_RATE = 0.05


class EnsembleError(NumericError):
    pass


@dataclass(frozen=True)
class MultinomialWeights:
    counts: np.ndarray
    n: int

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.n


def draw_multinomial_weights(n: int, seed: int) -> MultinomialWeights:
    """Tally ``n`` i.i.d. uniform draws from ``{0, ..., n-1}``."""
    if n < 1:
        raise InputError("n must be at least 1", key="n")
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, n, size=n)
    return MultinomialWeights(np.bincount(idx, minlength=n), n)


@dataclass
class BootstrapEnsemble:
    base_fit: SvmFit
    replicates: np.ndarray  # (B_ok, n) coefficient vectors on base_fit.support_points
    replicate_index: np.ndarray  # which b each row belongs to
    grid: np.ndarray
    scaled_draws: np.ndarray  # (B_ok, g)
    master_seed: int
    seeds: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.base_fit.support_points.shape[0]

    def recompute_scaled_draws(self) -> np.ndarray:
        Kg = self.base_fit.kernel(self.grid, self.base_fit.support_points)
        return _scaled(Kg, self.replicates, self.base_fit.alpha, self.n)

    def draws_at(self, j: int) -> np.ndarray:
        return self.scaled_draws[:, j]

    def save(self, csv_path, json_path):
        write_table(csv_path, self.scaled_draws, _grid_header(self.grid.shape[0]))
        meta = {
            "master_seed": self.master_seed,
            "n": self.n,
            "B": len(self.seeds),
            "replicate_index": self.replicate_index.tolist(),
            "seeds": [str(s) for s in self.seeds],
            "failed": self.failed,
            "grid": self.grid.tolist(),
            "base_fit": self.base_fit.to_dict(),
        }
        Path(json_path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def _scaled(Kg, replicates, base_alpha, n):
    if replicates.shape[0] == 0:
        return np.zeros((0, Kg.shape[0]))
    return np.sqrt(n) * (replicates @ Kg.T - Kg @ base_alpha)


class _Replicate:
    """Picklable per-index task."""

    def __init__(self, data, kernel, loss, lam, factor, master_seed):
        self.data = data
        self.kernel = kernel
        self.loss = loss
        self.lam = lam
        self.factor = factor
        self.master_seed = master_seed

    def __call__(self, b):
        seed = derive_seed(self.master_seed, b)
        counts = draw_multinomial_weights(self.data.n, seed)
        sample = WeightedSample(self.data, counts.weights)
        try:
            rep = fit(sample, self.kernel, self.loss, self.lam, factor=self.factor)
        except NumericError as exc:
            return seed, None, str(exc)
        return seed, rep.alpha, None


def bootstrap_ensemble(data: Dataset, kernel: KernelSpec, loss: SmoothLoss, lam: float,
                       B: int, grid, master_seed: int, jobs: int = 1,
                       base_fit: SvmFit | None = None,
                       factor: np.ndarray | None = None) -> BootstrapEnsemble:
    """Fit ``B`` bootstrap replicates and collect ``sqrt(n) (f*_b - f_n)`` on ``grid``.

    Replicate ``b`` (1-based) uses the seed ``derive_seed(master_seed, b)``,
    so the result does not depend on ``jobs``.  Replicates whose fit fails
    are dropped and listed in ``failed``; more than 5% failures raise
    :class:`EnsembleError`.
    """
    if B < 0:
        raise InputError("B must be nonnegative", key="B")
    grid = as_points(grid, dim=data.dim)
    if factor is None:
        factor = pivoted_cholesky(kernel, data.xs)
    if base_fit is None:
        base_fit = fit(WeightedSample.uniform(data), kernel, loss, lam, factor=factor)
    task = _Replicate(data, kernel, loss, lam, factor, master_seed)
    results = indexed_map(task, range(1, B + 1), jobs=jobs)

    seeds, rows, index, failed = [], [], [], []
    for b, (seed, alpha, err) in zip(range(1, B + 1), results):
        seeds.append(seed)
        if alpha is None:
            failed.append({"replicate": b, "error": err})
            continue
        rows.append(alpha)
        index.append(b)
    if B and len(failed) > MAX_FAILURE_RATE * B:
        raise EnsembleError(
            f"{len(failed)} of {B} bootstrap fits failed", failures=len(failed)
        )
    if failed:
        log.warning("excluded %d failed bootstrap replicates", len(failed))
    replicates = np.array(rows) if rows else np.zeros((0, data.n))
    Kg = kernel(grid, data.xs)
    return BootstrapEnsemble(
        base_fit=base_fit,
        replicates=replicates,
        replicate_index=np.array(index, dtype=int),
        grid=grid,
        scaled_draws=_scaled(Kg, replicates, base_fit.alpha, data.n),
        master_seed=master_seed,
        seeds=seeds,
        failed=failed,
    )


def _grid_header(g):
    return [f"grid_{j}" for j in range(g)]
