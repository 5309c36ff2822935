"""Influence functions of the kernel machine and the induced Gaussian law.

All elements of the RKHS are stored as coefficient vectors over a finite set
of representation points ``p_1..p_m`` (training inputs first, then any
extra evaluation or contamination points).  The operator

    K f = 2 lam f + (1/n) sum_i L''(x_i, y_i, f_n(x_i)) f(x_i) k(., x_i)

maps that span into itself, so in coefficients it is the matrix
``2 lam I + (1/n) D Kt`` with ``D`` the diagonal of second derivatives
(zero on non-training rows) and ``Kt`` the Gram matrix of the
representation points.  The derivative of the fit in direction
``Q`` is ``-K^{-1} E_Q[L' k(., x)]``; with ``Q = delta_z - P_n`` this is the
influence function of ``z``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import InputError, NumericError
from .kernel import TOL_PSD, as_points
from .solver import Dataset, SvmFit

log = logging.getLogger(__name__)

#: Tolerated magnitude of clamped negative covariance eigenvalues, relative to the trace.
CLAMP_TOL = 1e-8


@dataclass
class InfluenceModel:
    fit: SvmFit
    data: Dataset
    representation_points: np.ndarray
    gram: np.ndarray
    curvature: np.ndarray  # D_jj, zero past the training rows
    slopes: np.ndarray  # L'(x_i, y_i, f_n(x_i)) on training rows
    kp_matrix: np.ndarray
    _lu: tuple = field(repr=False, default=None)
    _index: dict = field(repr=False, default_factory=dict)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def m(self) -> int:
        return self.representation_points.shape[0]

    def index_of(self, x) -> int | None:
        return self._index.get(_key(x))

    def ensure_points(self, points) -> "InfluenceModel":
        """Append any missing points and rebuild in place."""
        points = as_points(points, dim=self.data.dim)
        missing = [p for p in points if _key(p) not in self._index]
        if missing:
            extra = self.representation_points[self.n :]
            rebuilt = build_influence_model(
                self.fit, self.data, np.vstack([extra, np.array(missing)])
            )
            self.__dict__.update(rebuilt.__dict__)
        return self

    def apply(self, beta) -> np.ndarray:
        return self.kp_matrix @ beta

    def solve(self, rhs) -> np.ndarray:
        try:
            out = scipy.linalg.lu_solve(self._lu, rhs, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NumericError("operator solve failed") from exc
        if not np.all(np.isfinite(out)):
            raise NumericError("operator solve produced non-finite values")
        return out

    def evaluate(self, beta, grid) -> np.ndarray:
        """Values on ``grid`` of the expansions with coefficient columns ``beta``."""
        grid = as_points(grid, dim=self.data.dim)
        return self.fit.kernel(grid, self.representation_points) @ beta

    def rkhs_norm(self, beta) -> float:
        return float(np.sqrt(max(beta @ self.gram @ beta, 0.0)))

    def singular_values(self, metric: str = "rkhs") -> np.ndarray:
        """Singular values of the operator on the representation span.

        ``metric="rkhs"`` measures coefficient vectors in the RKHS norm
        ``|beta|^2 = beta' Kt beta``; the operator is self-adjoint there, and
        its singular values are the eigenvalues of
        ``2 lam I + (1/n) Kt^{1/2} D Kt^{1/2}``.  ``metric="euclidean"``
        treats coefficients as plain vectors.
        """
        if metric == "euclidean":
            return np.linalg.svd(self.kp_matrix, compute_uv=False)
        if metric != "rkhs":
            raise InputError(f"unknown metric {metric!r}", key="metric")
        evals, U = np.linalg.eigh(self.gram)
        root = (U * np.sqrt(np.clip(evals, 0.0, None))) @ U.T
        sym = (root * self.curvature) @ root / self.n
        sym = 0.5 * (sym + sym.T)
        return np.sort(2.0 * self.fit.lam + np.linalg.eigvalsh(sym))[::-1]


def _key(x):
    return tuple(float(v) for v in np.atleast_1d(x))


def build_influence_model(fit: SvmFit, data: Dataset, extra_points=None) -> InfluenceModel:
    """Assemble the operator in coefficients over ``data.xs`` plus ``extra_points``.

    Extra points already present (exactly) among the training inputs or
    earlier extras are dropped.
    """
    if fit.support_points.shape != data.xs.shape:
        raise InputError("fit was not computed on this dataset", key="data")
    xs = data.xs
    index = {}
    for i, x in enumerate(xs):
        index.setdefault(_key(x), i)
    rows = [x for x in xs]
    if extra_points is not None and np.size(extra_points):
        for p in as_points(extra_points, dim=data.dim):
            k = _key(p)
            if k not in index:
                index[k] = len(rows)
                rows.append(p)
    points = np.array(rows)
    n = data.n
    m = points.shape[0]
    gram = fit.kernel(points, points)
    gram = np.triu(gram) + np.triu(gram, 1).T

    f_train = gram[:n, :n] @ fit.alpha
    _, d1, d2 = fit.loss.derivatives(data.ys, f_train)
    curvature = np.zeros(m)
    curvature[:n] = d2
    kp = 2.0 * fit.lam * np.eye(m) + (curvature[:, None] * gram) / n
    try:
        lu = scipy.linalg.lu_factor(kp, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericError("influence operator is singular") from exc
    if np.any(np.abs(np.diag(lu[0])) < 1e-14 * max(1.0, np.abs(kp).max())):
        raise NumericError("influence operator is numerically singular; lambda too small?")
    return InfluenceModel(
        fit=fit,
        data=data,
        representation_points=points,
        gram=gram,
        curvature=curvature,
        slopes=d1,
        kp_matrix=kp,
        _lu=lu,
        _index=index,
    )


def _centered_rhs(model: InfluenceModel) -> np.ndarray:
    """Coefficients of ``-(1/n) sum_i L'_i k(., x_i)`` over the representation points."""
    rhs = np.zeros(model.m)
    rhs[: model.n] = -model.slopes / model.n
    return rhs


def influence_function(model: InfluenceModel, z) -> np.ndarray:
    """Coefficients of the derivative of the fit in direction ``delta_z - P_n``.

    ``z = (x, y)``.  If ``x`` is not a representation point it is appended
    and ``model`` is rebuilt in place.
    """
    x, y = z
    x = np.atleast_1d(np.asarray(x, dtype=float))
    model.ensure_points(x[None, :])
    j = model.index_of(x)
    t = float(model.gram[j, : model.n] @ model.fit.alpha)
    model.fit.loss.check_targets([y])
    _, slope, _ = model.fit.loss.derivatives(float(y), t)
    rhs = _centered_rhs(model)
    rhs[j] += float(slope)
    return -model.solve(rhs)


def training_influences(model: InfluenceModel) -> np.ndarray:
    """Influence coefficients of every training point, one column per point."""
    n = model.n
    rhs = np.repeat(_centered_rhs(model)[:, None], n, axis=1)
    rhs[np.arange(n), np.arange(n)] += model.slopes
    return -model.solve(rhs)


@dataclass
class AsymptoticLaw:
    grid: np.ndarray
    covariance: np.ndarray
    mean: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (self.grid.shape[0],) * 2:
            raise InputError("covariance shape does not match grid", key="covariance")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise NumericError("covariance is not symmetric")
        self.covariance = 0.5 * (cov + cov.T)
        if cov.size and np.linalg.eigvalsh(self.covariance)[0] < -TOL_PSD * max(
            1.0, np.trace(self.covariance)
        ):
            raise NumericError("covariance is not positive semidefinite")

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "covariance": self.covariance.tolist(),
            "mean": self.mean.tolist(),
            "basis": self.metadata,
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "AsymptoticLaw":
        obj = json.loads(Path(path).read_text())
        return cls(
            grid=as_points(obj["grid"]),
            covariance=np.asarray(obj["covariance"], dtype=float),
            mean=np.asarray(obj["mean"], dtype=float),
            metadata=obj.get("basis", {}),
        )


def asymptotic_law(model: InfluenceModel, data: Dataset, grid) -> AsymptoticLaw:
    """Zero-mean Gaussian approximation to ``sqrt(n) (f_n - f)`` on ``grid``.

    The covariance is the empirical second moment of the training-point
    influence functions evaluated on the grid; their empirical mean is zero
    by construction.
    """
    if data is not model.data and data.n != model.n:
        raise InputError("law must be estimated on the model's training data", key="data")
    grid = as_points(grid, dim=model.data.dim)
    model.ensure_points(grid)
    values = model.evaluate(training_influences(model), grid)  # (g, n)
    cov = values @ values.T / model.n
    return AsymptoticLaw(
        grid=grid,
        covariance=cov,
        mean=np.zeros(grid.shape[0]),
        metadata={
            "representation_points": model.m,
            "training_points": model.n,
            "lambda": model.fit.lam,
            "kernel": model.fit.kernel.to_dict(),
            "loss": model.fit.loss.to_dict(),
        },
    )


def sample_gaussian(law: AsymptoticLaw, count: int, seed: int) -> np.ndarray:
    """``count`` draws from ``N(0, law.covariance)`` via the symmetric square root."""
    g = law.grid.shape[0]
    if count < 0:
        raise InputError("count must be nonnegative", key="count")
    evals, U = np.linalg.eigh(law.covariance)
    negative = -evals[evals < 0].sum()
    trace = float(np.trace(law.covariance))
    if negative > 0:
        log.info("clamped negative covariance eigenvalues of total %.3g", negative)
        if negative > CLAMP_TOL * max(trace, np.finfo(float).tiny):
            raise NumericError(
                "covariance has significant negative eigenvalues",
                clamped=float(negative), trace=trace,
            )
    root = (U * np.sqrt(np.clip(evals, 0.0, None))) @ U.T
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((count, g)) @ root
