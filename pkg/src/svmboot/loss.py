"""Smooth convex losses with their first two derivatives in the prediction.

All losses here depend on ``(y, t)`` only; the ``x`` argument of
:func:`evaluate` is accepted for signature compatibility and ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import ConfigError, InputError

FAMILIES = ("logistic_classification", "logistic_regression", "huber", "smoothed_hinge")
CLASSIFICATION = ("logistic_classification", "smoothed_hinge")

#: Width of the cubic blend that makes the Huber second derivative continuous.
HUBER_BLEND = 1e-3
#: Number of t-grid points used by :func:`envelope_certificate`.
ENVELOPE_GRID = 512

_LN2 = np.log(2.0)


class LossEval(NamedTuple):
    value: float
    d1: float
    d2: float


@dataclass(frozen=True)
class SmoothLoss:
    """A loss family. ``delta`` belongs to ``huber``, ``eps`` to ``smoothed_hinge``."""

    family: str
    delta: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            hint = ""
            if self.family == "hinge":
                hint = "; the hinge loss is not differentiable, use smoothed_hinge"
            raise ConfigError(
                f"unknown loss family {self.family!r}{hint}", key="loss.family"
            )
        if self.family == "huber":
            delta = 1.0 if self.delta is None else float(self.delta)
            if not np.isfinite(delta) or delta <= 0:
                raise ConfigError("huber requires delta > 0", key="loss.delta")
            object.__setattr__(self, "delta", delta)
        elif self.delta is not None:
            raise ConfigError(f"delta is not valid for {self.family}", key="loss.delta")
        if self.family == "smoothed_hinge":
            if self.eps is None or not np.isfinite(self.eps) or self.eps <= 0:
                raise ConfigError("smoothed_hinge requires eps > 0", key="loss.eps")
            object.__setattr__(self, "eps", float(self.eps))
        elif self.eps is not None:
            raise ConfigError(f"eps is not valid for {self.family}", key="loss.eps")

    @property
    def target_space(self) -> str:
        return "binary_labels" if self.family in CLASSIFICATION else "real"

    def check_targets(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise InputError("targets contain non-finite values", key="y")
        if self.target_space == "binary_labels" and not np.all(np.abs(y) == 1.0):
            raise InputError(
                f"{self.family} requires labels in {{-1, +1}}", key="y"
            )
        return y

    def derivatives(self, y, t):
        """Vectorised ``(L, L', L'')`` with broadcasting over ``y`` and ``t``.

        No validation; hot loops call this directly.
        """
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        return _DISPATCH[self.family](self, y, t)

    def sup_second_derivative(self) -> float:
        """Global bound on ``|L''|`` over all ``(y, t)``."""
        return {
            "logistic_classification": 0.25,
            "logistic_regression": 0.5,
            "huber": 1.0,
            "smoothed_hinge": 1.0 / (4.0 * self.eps) if self.eps else np.inf,
        }[self.family]

    def knots(self, y) -> np.ndarray:
        """Points in ``t`` where ``L''`` is not smooth, for one target ``y``."""
        if self.family == "huber":
            w = min(HUBER_BLEND, self.delta)
            a = self.delta - w / 2
            r = np.array([a, a + w, -a, -a - w])
            return y - r
        if self.family == "smoothed_hinge":
            w = 4.0 * self.eps
            return np.array([(1.0 - w / 2) / y, (1.0 + w / 2) / y])
        return np.empty(0)

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.delta is not None:
            out["delta"] = self.delta
        if self.eps is not None:
            out["eps"] = self.eps
        return out

    @classmethod
    def from_dict(cls, obj) -> "SmoothLoss":
        if isinstance(obj, str):
            obj = {"family": obj}
        if not isinstance(obj, dict) or "family" not in obj:
            raise ConfigError("loss must be an object with a 'family' key", key="loss")
        unknown = set(obj) - {"family", "delta", "eps"}
        if unknown:
            raise ConfigError(f"unknown loss keys {sorted(unknown)}", key="loss")
        return cls(**obj)


def _logistic_classification(loss, y, t):
    m = y * t
    value = np.logaddexp(0.0, -m)
    d1 = -y * expit(-m)
    d2 = y * y * expit(m) * expit(-m)
    return value, d1, d2


def _logistic_regression(loss, y, t):
    # L = -ln(4 e^r / (1 + e^r)^2) = 2 ln cosh(r/2), r = y - t
    r = y - t
    ar = np.abs(r)
    small = ar < 20.0
    with np.errstate(over="ignore"):
        near = 2.0 * np.log1p(2.0 * np.sinh(np.where(small, r, 0.0) / 4.0) ** 2)
    far = ar + 2.0 * np.log1p(np.exp(-ar)) - 2.0 * _LN2
    value = np.where(small, near, far)
    d1 = -np.tanh(r / 2.0)
    e = np.exp(-ar)
    d2 = 2.0 * e / (1.0 + e) ** 2
    return value, d1, d2


def _huber(loss, y, t):
    delta = loss.delta
    w = min(HUBER_BLEND, delta)
    a = delta - w / 2
    r = y - t
    ar = np.abs(r)
    s = np.sign(r)
    u = np.clip(ar - a, 0.0, w)
    inner = ar <= a
    outer = ar >= a + w
    value = np.where(
        inner,
        0.5 * r * r,
        np.where(
            outer,
            delta * ar - 0.5 * delta * delta - w * w / 24.0,
            0.5 * a * a + a * u + 0.5 * u * u - u**3 / (6.0 * w),
        ),
    )
    psi = np.where(inner, r, np.where(outer, delta * s, s * (a + u - u * u / (2.0 * w))))
    dpsi = np.where(inner, 1.0, np.where(outer, 0.0, 1.0 - u / w))
    return value, -psi, dpsi


def _smoothed_hinge(loss, y, t):
    w = 4.0 * loss.eps
    m = y * t
    u = 1.0 - m
    # right-continuity in t: the quadratic zone is the half-open t-interval
    # [t_lo, t_hi) between the two knots.
    t_lo = np.where(y > 0, (1.0 - w / 2) / y, (1.0 + w / 2) / y)
    t_hi = np.where(y > 0, (1.0 + w / 2) / y, (1.0 - w / 2) / y)
    quad = (t >= t_lo) & (t < t_hi)
    linear = ~quad & (u > 0)
    value = np.where(quad, (u + w / 2) ** 2 / (2.0 * w), np.where(linear, u, 0.0))
    dldu = np.where(quad, (u + w / 2) / w, np.where(linear, 1.0, 0.0))
    d2u = np.where(quad, 1.0 / w, 0.0)
    return value, -y * dldu, y * y * d2u


_DISPATCH = {
    "logistic_classification": _logistic_classification,
    "logistic_regression": _logistic_regression,
    "huber": _huber,
    "smoothed_hinge": _smoothed_hinge,
}


def evaluate(loss: SmoothLoss, x, y: float, t: float) -> LossEval:
    """``(L, L', L'')`` at one point. ``x`` is unused by every family here."""
    y = float(y)
    t = float(t)
    if not np.isfinite(t):
        raise InputError("prediction t must be finite", key="t")
    loss.check_targets([y])
    value, d1, d2 = loss.derivatives(y, t)
    return LossEval(float(value), float(d1), float(d2))


def smoothed_hinge(eps: float) -> SmoothLoss:
    """C^1 convex loss within ``eps / 2`` of ``max(0, 1 - y t)`` everywhere.

    The kink at margin 1 is replaced by a quadratic over a margin window of
    width ``4 * eps``; the second derivative is piecewise constant.
    """
    if eps is None or not eps > 0:
        raise ConfigError("smoothed_hinge requires eps > 0", key="eps")
    return SmoothLoss("smoothed_hinge", eps=eps)


def envelope_certificate(loss: SmoothLoss, a: float, sample):
    """Per-point bounds on ``sup_{|t| <= a} |L'|`` and a global bound on ``|L''|``.

    Parameters
    ----------
    loss : SmoothLoss
    a : float
        Half-width of the prediction interval, ``a > 0``.
    sample : sequence of (x, y)
        Only the targets are used.

    Returns
    -------
    b_prime : ndarray of shape (n,)
    b_dprime : float
    """
    if not a > 0 or not np.isfinite(a):
        raise InputError("envelope half-width a must be positive", key="a")
    sample = list(sample)
    if not sample:
        raise InputError("sample must be nonempty", key="sample")
    ys = loss.check_targets([y for _, y in sample])
    grid = np.linspace(-a, a, ENVELOPE_GRID)
    b_prime = np.empty(len(ys))
    b_dprime = 0.0
    for i, y in enumerate(ys):
        # stationary points of |L'| and L'' for these families: t = 0 (margin
        # zero), t = y (zero residual), plus the blend knots
        extra = np.concatenate([[0.0, y, 1.0 / y if y else 0.0], loss.knots(y)])
        extra = extra[np.abs(extra) <= a]
        ts = np.concatenate([grid, extra])
        _, d1, d2 = loss.derivatives(y, ts)
        b_prime[i] = np.max(np.abs(d1))
        b_dprime = max(b_dprime, float(np.max(np.abs(d2))))
    return b_prime, b_dprime
