import numpy as np
import pytest

from svmboot.kernel import KernelSpec
from svmboot.loss import SmoothLoss
from svmboot.solver import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def rbf():
    return KernelSpec("gaussian_rbf", gamma=1.0)


def regression_data(rng, n, noise=0.5):
    x = rng.uniform(-3, 3, (n, 1))
    return Dataset(x, np.sin(x[:, 0]) + noise * rng.standard_normal(n))


def classification_data(rng, n, dim=1):
    y = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    x = rng.standard_normal((n, dim))
    x[:, 0] += y
    return Dataset(x, y)


def hinge(y, t):
    return np.maximum(0.0, 1.0 - y * t)


def probes(loss, rng, count=1000):
    t = rng.uniform(-5, 5, count)
    if loss.target_space == "binary_labels":
        y = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
    else:
        y = rng.uniform(-4, 4, count)
    return y, t


def away_from_knots(loss, y, t, margin):
    keep = np.ones(t.shape, bool)
    for i in range(t.size):
        knots = loss.knots(y[i])
        if knots.size and np.min(np.abs(knots - t[i])) < margin:
            keep[i] = False
    return keep


LOGREG = SmoothLoss("logistic_regression")
LOGCLS = SmoothLoss("logistic_classification")


def gateaux_difference(data, z, grid, kernel, loss, lam, eps=1e-5):
    """Central difference of the fit in direction ``delta_z - P_n`` on ``grid``.

    ``z`` is appended as an extra support point with zero base weight, and the
    two perturbed (signed) measures are fitted directly.
    """
    from svmboot.solver import evaluate_on_grid, fit_signed

    x_z, y_z = z
    n = data.n
    ext = Dataset(np.vstack([data.xs, np.atleast_2d(x_z)]), np.append(data.ys, y_z))
    base = np.append(np.full(n, 1.0 / n), 0.0)
    direction = np.append(np.full(n, -1.0 / n), 1.0)
    plus = fit_signed(ext, base + eps * direction, kernel, loss, lam)
    minus = fit_signed(ext, base - eps * direction, kernel, loss, lam)
    return (evaluate_on_grid(plus, grid) - evaluate_on_grid(minus, grid)) / (2 * eps)


#: One line per acceptance criterion, filled in by the acceptance tests.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
