"""Empirical laws: ECDF distances, quantiles and percentile intervals.

Quantiles use linear interpolation between order statistics at position
``(m - 1) q`` (0-based), the same rule as ``numpy.quantile``'s default.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class EmpiricalLaw:
    """Draws of shape ``(m,)`` for a scalar law or ``(m, g)`` for a grid law."""

    draws: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim not in (1, 2) or draws.shape[0] < 1:
            raise InputError(f"law {self.label!r} has no draws", key="draws")
        if not np.all(np.isfinite(draws)):
            raise InputError(f"law {self.label!r} has non-finite draws", key="draws")
        object.__setattr__(self, "draws", draws)

    @property
    def m(self) -> int:
        return self.draws.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.draws.ndim == 1

    def marginal(self, j: int) -> "EmpiricalLaw":
        if self.is_scalar:
            raise InputError("scalar law has no marginals", key="draws")
        return EmpiricalLaw(self.draws[:, j], f"{self.label}[{j}]")

    def save(self, path):
        draws = self.draws[:, None] if self.is_scalar else self.draws
        header = [self.label or "value"] if self.is_scalar else [
            f"grid_{j}" for j in range(draws.shape[1])
        ]
        write_table(path, draws, header)

    @classmethod
    def load(cls, path, label: str | None = None) -> "EmpiricalLaw":
        header, rows = read_table(path)
        draws = rows[:, 0] if len(header) == 1 else rows
        return cls(draws, label if label is not None else header[0] if len(header) == 1 else "")


def _scalar(law) -> np.ndarray:
    if not isinstance(law, EmpiricalLaw):
        law = EmpiricalLaw(law)
    if not law.is_scalar:
        raise InputError("operation needs a scalar law", key="draws")
    return law.draws


def _ecdf_gap(a, b):
    """Merged sorted support and ``|F_a - F_b|`` on each interval to its right."""
    a = np.sort(a)
    b = np.sort(b)
    support = np.union1d(a, b)
    fa = np.searchsorted(a, support, side="right") / a.size
    fb = np.searchsorted(b, support, side="right") / b.size
    return support, np.abs(fa - fb)


def kolmogorov_distance(a, b) -> float:
    """``sup_t |F_a(t) - F_b(t)|``, exact over the merged support."""
    _, gap = _ecdf_gap(_scalar(a), _scalar(b))
    return float(gap.max())


def bounded_lipschitz_distance(a, b, grid_resolution: int = 1024) -> float:
    """Integral of ``|F_a - F_b|`` clipped at 1.

    For 1-D laws this integral is the Wasserstein-1 distance, which coincides
    with the bounded-Lipschitz distance as long as it stays below 1 and
    dominates it otherwise. The integrand is piecewise constant between
    support points, so integrating on the merged support refined by a
    ``grid_resolution``-point uniform grid is exact.
    """
    if int(grid_resolution) < 2:
        raise ConfigError("grid_resolution must be at least 2", key="grid_resolution")
    a = _scalar(a)
    b = _scalar(b)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        return 0.0
    nodes = np.union1d(np.union1d(a, b), np.linspace(lo, hi, int(grid_resolution)))
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    fa = np.searchsorted(np.sort(a), mids, side="right") / a.size
    fb = np.searchsorted(np.sort(b), mids, side="right") / b.size
    return float(min(1.0, np.sum(np.abs(fa - fb) * np.diff(nodes))))


def quantile(a, q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ConfigError(f"quantile level {q} outside [0, 1]", key="q")
    return float(np.quantile(_scalar(a), q, method="linear"))


def percentile_ci(a, level: float) -> tuple[float, float]:
    """Equal-tailed interval of the draws at confidence ``level``."""
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level {level} outside (0, 1)", key="level")
    draws = _scalar(a)
    if draws.size < 2:
        raise InputError("percentile interval needs at least two draws", key="draws")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [tail, 1.0 - tail], method="linear")
    return float(lo), float(hi)


def write_table(path, rows, header):
    rows = np.asarray(rows, dtype=float).reshape(-1, len(header))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_table(path) -> tuple[list, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))
