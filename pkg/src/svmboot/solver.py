"""Weighted regularised risk minimisation over kernel expansions.

Minimises

    G(alpha) = sum_i w_i L(x_i, y_i, (K alpha)_i) + lam * alpha' K alpha

by damped Newton in alpha-coordinates.  The Gram matrix enters only through
a factor ``V`` with ``K = V V'`` (pivoted Cholesky), so one factor can be
shared by every bootstrap replicate on the same support points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError, InputError, NumericError
from .kernel import KernelSpec, as_points, pivoted_cholesky
from .loss import SmoothLoss

log = logging.getLogger(__name__)

TOL_KKT = 1e-8
MAX_ITER = 100
ARMIJO_C = 1e-4
WEIGHT_SUM_TOL = 1e-12
# stationarity |alpha + w L' / (2 lam)| reached before returning
_STAT_TARGET = 1e-12
_STAT_ACCEPT = 1e-9


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = as_points(self.xs)
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.shape[0] < 1:
            raise InputError("dataset must contain at least one point", key="xs")
        if ys.shape[0] != xs.shape[0]:
            raise InputError(
                f"{xs.shape[0]} inputs but {ys.shape[0]} targets", key="ys"
            )
        if not np.all(np.isfinite(ys)):
            raise InputError("targets contain non-finite values", key="ys")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def take(self, idx) -> "Dataset":
        return Dataset(self.xs[idx], self.ys[idx])


@dataclass(frozen=True)
class WeightedSample:
    data: Dataset
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if w.shape[0] != self.data.n:
            raise InputError("weight vector length differs from sample size", key="w")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("weights must be finite and nonnegative", key="w")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InputError(f"weights sum to {w.sum()!r}, not 1", key="w")
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls, data: Dataset) -> "WeightedSample":
        return cls(data, np.full(data.n, 1.0 / data.n))


@dataclass
class SvmFit:
    support_points: np.ndarray
    alpha: np.ndarray
    lam: float
    kernel: KernelSpec
    loss: SmoothLoss
    objective: float
    grad_norm: float
    n_iter: int = 0
    stationarity: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]

    def rkhs_norm(self) -> float:
        K = self.kernel(self.support_points, self.support_points)
        return float(np.sqrt(max(self.alpha @ K @ self.alpha, 0.0)))

    def __call__(self, grid) -> np.ndarray:
        return evaluate_on_grid(self, grid)

    def to_dict(self) -> dict:
        return {
            "support_points": self.support_points.tolist(),
            "alpha": self.alpha.tolist(),
            "lambda": self.lam,
            "kernel": self.kernel.to_dict(),
            "loss": self.loss.to_dict(),
            "objective": self.objective,
            "grad_norm": self.grad_norm,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SvmFit":
        return cls(
            support_points=as_points(obj["support_points"]),
            alpha=np.asarray(obj["alpha"], dtype=float),
            lam=float(obj["lambda"]),
            kernel=KernelSpec.from_dict(obj["kernel"]),
            loss=SmoothLoss.from_dict(obj["loss"]),
            objective=float(obj["objective"]),
            grad_norm=float(obj["grad_norm"]),
            n_iter=int(obj.get("n_iter", 0)),
        )


def decision_function(fit: SvmFit, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != fit.dim:
        raise InputError(
            f"input has dimension {x.shape}, fit expects {fit.dim}", key="x"
        )
    return float(fit.kernel(x[None, :], fit.support_points)[0] @ fit.alpha)


def evaluate_on_grid(fit: SvmFit, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return np.empty(0)
    grid = as_points(grid, dim=fit.dim)
    if grid.shape[1] != fit.dim:
        raise InputError(
            f"grid has dimension {grid.shape[1]}, fit expects {fit.dim}", key="grid"
        )
    return fit.kernel(grid, fit.support_points) @ fit.alpha


def fit(sample: WeightedSample, kernel: KernelSpec, loss: SmoothLoss, lam: float,
        factor: np.ndarray | None = None, max_iter: int = MAX_ITER) -> SvmFit:
    """Minimise the weighted regularised risk.

    Parameters
    ----------
    sample : WeightedSample
    kernel, loss
        Components of the objective.
    lam : float
        Regularisation strength, ``lam > 0``.
    factor : ndarray, optional
        Precomputed ``V`` with ``V V' = K`` on ``sample.data.xs``.  Pass the
        same factor to every fit that shares the support points.
    max_iter : int
        Newton iteration cap.

    Returns
    -------
    SvmFit
        Coefficients satisfy ``alpha_i = -w_i L'_i / (2 lam)`` up to
        roughly ``1e-12``.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise ConfigError("lambda must be positive", key="lambda")
    data = sample.data
    loss.check_targets(data.ys)
    if factor is None:
        factor = pivoted_cholesky(kernel, data.xs)
    return _newton(data, sample.w, kernel, loss, float(lam), factor, max_iter)


def fit_signed(data: Dataset, w, kernel: KernelSpec, loss: SmoothLoss, lam: float,
               factor: np.ndarray | None = None) -> SvmFit:
    """Like :func:`fit` but for signed measures such as ``P_n - eps (delta_z - P_n)``.

    Only meaningful when the negative mass is small enough for the objective
    to stay strongly convex; used for finite-difference derivative checks.
    """
    w = np.asarray(w, dtype=float)
    if factor is None:
        factor = pivoted_cholesky(kernel, data.xs)
    return _newton(data, w, kernel, loss, float(lam), factor, MAX_ITER)


def objective(alpha, V, w, ys, loss: SmoothLoss, lam: float) -> float:
    theta = V.T @ alpha
    value, _, _ = loss.derivatives(ys, V @ theta)
    return float(w @ value + lam * max(theta @ theta, 0.0))


def _newton(data, w, kernel, loss, lam, V, max_iter):
    n = data.n
    ys = data.ys
    two_lam = 2.0 * lam
    alpha = np.zeros(n)
    theta = np.zeros(V.shape[1])
    f = np.zeros(n)
    value, d1, d2 = loss.derivatives(ys, f)
    G = float(w @ value)
    history = [G]
    best_stat = np.inf
    it = 0
    while True:
        r = w * d1 + two_lam * alpha
        stat = float(np.max(np.abs(r))) / two_lam
        grad = V @ (V.T @ r)
        grad_norm = float(np.max(np.abs(grad))) if n else 0.0
        if stat <= _STAT_TARGET * max(1.0, float(np.max(np.abs(alpha)))):
            break
        if it >= max_iter:
            if stat <= _STAT_ACCEPT and grad_norm <= TOL_KKT:
                break
            raise ConvergenceError(
                f"Newton did not converge in {max_iter} iterations",
                stationarity=stat, grad_norm=grad_norm, objective=G, iterations=it,
            )
        if stat >= best_stat and stat <= _STAT_ACCEPT and grad_norm <= TOL_KKT:
            # rounding floor: the last step did not improve the residual
            break
        best_stat = min(best_stat, stat)
        it += 1

        D = w * d2
        DV = D[:, None] * V
        inner = two_lam * np.eye(V.shape[1]) + V.T @ DV
        try:
            try:
                cho = scipy.linalg.cho_factor(inner, check_finite=False)
                corr = scipy.linalg.cho_solve(cho, V.T @ r, check_finite=False)
            except np.linalg.LinAlgError:
                corr = np.linalg.solve(inner, V.T @ r)
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular Newton system", iterations=it) from exc
        step = -(r - DV @ corr) / two_lam
        if not np.all(np.isfinite(step)):
            raise NumericError("non-finite Newton step", iterations=it)
        slope = float(grad @ step)
        step_theta = V.T @ step

        t = 1.0
        accepted = False
        for _ in range(60):
            theta_new = theta + t * step_theta
            f_new = V @ theta_new
            v_new, d1_new, d2_new = loss.derivatives(ys, f_new)
            with np.errstate(over="ignore", invalid="ignore"):
                # an overflowing trial gives inf or nan and is rejected below
                G_new = float(w @ v_new + lam * (theta_new @ theta_new))
            if not np.isfinite(G_new):
                t *= 0.5
                continue
            if G_new <= G + ARMIJO_C * t * slope:
                accepted = True
                break
            if t == 1.0:
                # near the optimum G is flat to rounding; accept a full step
                # that reduces the stationarity residual instead
                alpha_try = alpha + step
                r_try = w * d1_new + two_lam * alpha_try
                if (G_new <= G + 1e-14 * max(1.0, abs(G))
                        and np.max(np.abs(r_try)) < np.max(np.abs(r))):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if stat <= _STAT_ACCEPT and grad_norm <= TOL_KKT:
                break
            raise ConvergenceError(
                "line search failed", stationarity=stat, grad_norm=grad_norm,
                objective=G, iterations=it,
            )
        alpha = alpha + t * step
        theta = theta_new
        f = f_new
        d1, d2 = d1_new, d2_new
        G = G_new
        history.append(G)

    return SvmFit(
        support_points=data.xs,
        alpha=alpha,
        lam=lam,
        kernel=kernel,
        loss=loss,
        objective=G,
        grad_norm=grad_norm,
        n_iter=it,
        stationarity=stat,
        history=history,
    )


def norm_bound(sample: WeightedSample, loss: SmoothLoss, lam: float) -> float:
    """``sqrt(sum_i w_i L(x_i, y_i, 0) / lam)``, an upper bound on ``|f|_H``."""
    value, _, _ = loss.derivatives(sample.data.ys, np.zeros(sample.data.n))
    return float(np.sqrt(sample.w @ value / lam))
