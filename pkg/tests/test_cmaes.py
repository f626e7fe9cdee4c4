import numpy as np
import pytest

from adiabatic_pdf.cmaes import CMAES, NonFiniteLossError, default_popsize


def sphere(X):
    return np.sum((X - 1.0) ** 2, axis=1)


def rosenbrock(X):
    return np.sum(100 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (1 - X[:, :-1]) ** 2, axis=1)


def test_default_popsize():
    assert default_popsize(1) == 4
    assert default_popsize(25) == 4 + int(3 * np.log(25))


def test_sphere_reaches_target():
    res = CMAES(np.zeros(5), 0.5, seed=1).minimize(sphere, target=1e-12, max_iters=2000)
    assert res.stop_reason == "target"
    assert np.allclose(res.xbest, 1.0, atol=1e-5)


def test_rosenbrock():
    res = CMAES(np.zeros(4), 0.3, seed=3).minimize(rosenbrock, target=1e-10, max_iters=5000)
    assert res.fbest <= 1e-10
    assert np.allclose(res.xbest, 1.0, atol=1e-4)


def test_trace_monotone_and_deterministic():
    a = CMAES(np.zeros(3), 0.5, seed=7).minimize(sphere, max_iters=50)
    b = CMAES(np.zeros(3), 0.5, seed=7).minimize(sphere, max_iters=50)
    assert a.trace == b.trace
    assert np.all(np.diff(a.trace) <= 0)
    assert a.iterations == 50 and a.stop_reason == "max_iters"
    assert a.evaluations == 50 * default_popsize(3)


def test_stagnation_stop():
    res = CMAES(np.zeros(2), 0.5, seed=0).minimize(sphere, max_iters=100_000, tolx=1e-6)
    assert res.stop_reason == "stagnation"
    assert res.iterations < 100_000


def test_non_finite_loss():
    with pytest.raises(NonFiniteLossError):
        CMAES(np.zeros(2), 0.5).minimize(lambda X: np.full(len(X), np.nan), max_iters=3)


def test_bad_objective_shape():
    with pytest.raises(ValueError):
        CMAES(np.zeros(2), 0.5).minimize(lambda X: np.zeros(1), max_iters=1)
