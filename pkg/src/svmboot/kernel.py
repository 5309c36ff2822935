"""Positive-definite kernels, Gram matrices and RKHS norms of kernel expansions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

FAMILIES = ("gaussian_rbf", "polynomial", "linear")

#: Absolute tolerance on the smallest Gram eigenvalue.
TOL_PSD = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its parameters, validated at construction.

    ``gaussian_rbf``: ``exp(-gamma * |x - x'|^2)``.
    ``polynomial``: ``(<x, x'> + offset) ** degree``.
    ``linear``: ``<x, x'>``.
    """

    family: str
    gamma: float | None = None
    degree: int | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}",
                key="kernel.family",
            )
        if self.family == "gaussian_rbf":
            gamma = 1.0 if self.gamma is None else float(self.gamma)
            if not np.isfinite(gamma) or gamma <= 0:
                raise ConfigError("gaussian_rbf requires gamma > 0", key="kernel.gamma")
            object.__setattr__(self, "gamma", gamma)
            self._reject("degree", "offset")
        elif self.family == "polynomial":
            degree = 2 if self.degree is None else self.degree
            offset = 1.0 if self.offset is None else float(self.offset)
            if int(degree) != degree or degree < 1:
                raise ConfigError("polynomial requires integer degree >= 1", key="kernel.degree")
            if not np.isfinite(offset) or offset < 0:
                raise ConfigError("polynomial requires offset >= 0", key="kernel.offset")
            object.__setattr__(self, "degree", int(degree))
            object.__setattr__(self, "offset", offset)
            self._reject("gamma")
        else:
            self._reject("gamma", "degree", "offset")

    def _reject(self, *names):
        for name in names:
            if getattr(self, name) is not None:
                raise ConfigError(
                    f"parameter {name!r} is not valid for kernel {self.family!r}",
                    key=f"kernel.{name}",
                )

    @property
    def max_diagonal(self) -> float | None:
        """``sup_x k(x, x)`` when it is finite independent of the domain."""
        return 1.0 if self.family == "gaussian_rbf" else None

    def __call__(self, X, Y) -> np.ndarray:
        """Cross-kernel matrix ``k(X[i], Y[j])`` for 2-D inputs."""
        if X.shape[1] != Y.shape[1]:
            raise InputError(
                f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}", key="points"
            )
        if self.family == "gaussian_rbf":
            sq = (
                np.sum(X * X, axis=1)[:, None]
                + np.sum(Y * Y, axis=1)[None, :]
                - 2.0 * (X @ Y.T)
            )
            np.maximum(sq, 0.0, out=sq)
            return np.exp(-self.gamma * sq)
        inner = X @ Y.T
        if self.family == "polynomial":
            return (inner + self.offset) ** self.degree
        return inner

    def diagonal(self, X) -> np.ndarray:
        if self.family == "gaussian_rbf":
            return np.ones(X.shape[0])
        inner = np.einsum("ij,ij->i", X, X)
        if self.family == "polynomial":
            return (inner + self.offset) ** self.degree
        return inner

    def to_dict(self) -> dict:
        out = {"family": self.family}
        for name in ("gamma", "degree", "offset"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "KernelSpec":
        if not isinstance(obj, dict) or "family" not in obj:
            raise ConfigError("kernel must be an object with a 'family' key", key="kernel")
        unknown = set(obj) - {"family", "gamma", "degree", "offset"}
        if unknown:
            raise ConfigError(f"unknown kernel keys {sorted(unknown)}", key="kernel")
        return cls(**obj)


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite ``(n, d)`` float array. 1-D input is one point per entry."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError("points must be a 2-D array", key="points")
    if not np.all(np.isfinite(arr)):
        raise InputError("points contain non-finite values", key="points")
    if dim is not None and arr.shape[0] and arr.shape[1] != dim:
        raise InputError(f"expected dimension {dim}, got {arr.shape[1]}", key="points")
    return arr


def eval_kernel(spec: KernelSpec, x, x2) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.ndim != 1 or x.shape != x2.shape or x.size == 0:
        raise InputError(f"dimension mismatch: {x.shape} vs {x2.shape}", key="x")
    if spec.family == "gaussian_rbf":
        diff = x - x2
        return float(np.exp(-spec.gamma * np.dot(diff, diff)))
    inner = float(np.dot(x, x2))
    if spec.family == "polynomial":
        return (inner + spec.offset) ** spec.degree
    return inner


@dataclass(frozen=True)
class GramMatrix:
    points: np.ndarray
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def gram_matrix(spec: KernelSpec, points) -> GramMatrix:
    X = as_points(points)
    if X.shape[0] == 0:
        raise InputError("cannot build a Gram matrix on an empty point set", key="points")
    K = spec(X, X)
    # exact symmetry regardless of the rounding in the expanded distance formula
    K = np.triu(K) + np.triu(K, 1).T
    if spec.family == "gaussian_rbf":
        np.fill_diagonal(K, 1.0)
    return GramMatrix(points=X, entries=K)


def rkhs_norm_sq(alpha, gram: GramMatrix | np.ndarray) -> float:
    """``alpha' K alpha`` for ``f = sum_j alpha_j k(., x_j)``.

    Not clamped; callers using it inside an objective should clamp at zero.
    """
    K = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.shape[0] != K.shape[0]:
        raise InputError(
            f"alpha has length {alpha.shape}, Gram matrix is {K.shape[0]}", key="alpha"
        )
    return float(alpha @ K @ alpha)


def pivoted_cholesky(spec: KernelSpec, points, rel_tol: float = 1e-12) -> np.ndarray:
    """Factor ``V`` with ``K ~= V V'``, stopping when the residual diagonal is tiny.

    Columns of ``K`` are generated on demand, so ``K`` is never materialised.
    The residual ``K - V V'`` is PSD with largest diagonal entry below
    ``rel_tol * max(diag K)``; for smooth kernels on low-dimensional inputs
    the returned rank is far below ``n``.
    """
    X = as_points(points)
    n = X.shape[0]
    d = spec.diagonal(X).astype(float)
    scale = float(d.max()) if n else 0.0
    if n == 0:
        return np.zeros((0, 0))
    tol = rel_tol * scale
    V = np.zeros((n, min(n, 64)))
    rank = 0
    while rank < n:
        i = int(np.argmax(d))
        pivot = d[i]
        if pivot <= tol:
            break
        if rank == V.shape[1]:
            V = np.hstack([V, np.zeros((n, min(n - rank, rank)))])
        col = spec(X, X[i : i + 1])[:, 0] - V[:, :rank] @ V[i, :rank]
        col /= np.sqrt(pivot)
        V[:, rank] = col
        d -= col * col
        d[i] = 0.0
        rank += 1
    return V[:, :rank].copy()
