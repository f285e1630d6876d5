import math

import numpy as np
import pytest

from mpme.core import DataError, NumericalError
from mpme.optim import OptimConfig, OptimResult, maximize


def test_maximize_quadratic():
    target = np.array([1.5, -2.0])

    def f(x):
        d = np.asarray(x) - target
        return -float(d @ d)

    res = maximize(f, [0.0, 0.0])
    assert res.converged
    # f_tol = 1e-10 terminates when the objective is flat to 1e-10, which
    # on a quadratic bowl pins the point only to ~1e-5.
    assert res.point == pytest.approx(tuple(target), abs=1e-4)
    assert res.objective == pytest.approx(0.0, abs=1e-9)


def test_maximize_one_dimensional():
    res = maximize(lambda x: -((x[0] - 3.0) ** 4), [10.0])
    assert res.converged
    assert res.point[0] == pytest.approx(3.0, abs=1e-2)


def test_maximize_never_below_init():
    # A plateau objective: the returned point must not score worse than
    # the starting point.
    def f(x):
        return min(0.0, -abs(x[0]))

    res = maximize(f, [0.0])
    assert res.objective >= f([0.0])


def test_maximize_is_deterministic():
    def f(x):
        return -((x[0] - 1.0) ** 2) - (x[1] + 2.0) ** 2 + 0.1 * math.sin(5.0 * x[0])

    a = maximize(f, [0.3, 0.7])
    b = maximize(f, [0.3, 0.7])
    assert a == b


def test_maximize_trace_monotone():
    res = maximize(lambda x: -(x[0] ** 2), [5.0])
    objs = [v for _, v in res.trace]
    assert all(b >= a for a, b in zip(objs, objs[1:]))
    assert res.objective == pytest.approx(objs[-1])


def test_maximize_neg_inf_is_tolerated():
    def f(x):
        if x[0] < 0:
            return -math.inf
        return -((x[0] - 0.5) ** 2)

    res = maximize(f, [2.0])
    assert res.point[0] == pytest.approx(0.5, abs=1e-5)


def test_maximize_nan_raises():
    with pytest.raises(NumericalError, match="NaN"):
        maximize(lambda x: math.nan, [0.0])

    def f(x):
        # NaN just past the first simplex vertex at 0.9 + 0.1 * 1.0.
        if x[0] > 0.95:
            return math.nan
        return -(x[0] ** 2)

    with pytest.raises(NumericalError, match="NaN"):
        maximize(f, [0.9])


def test_maximize_rejects_bad_init():
    with pytest.raises(DataError):
        maximize(lambda x: 0.0, [])
    with pytest.raises(DataError):
        maximize(lambda x: 0.0, [math.inf])
    with pytest.raises(DataError):
        maximize(lambda x: 0.0, [[1.0, 2.0]])


def test_converged_requires_all_restarts():
    # One iteration is never enough to shrink the simplex below x_tol on
    # this curved objective, so the cap fires and converged is False.
    cfg = OptimConfig(max_iters=1, restarts=1)
    res = maximize(lambda x: -(x[0] ** 2) - x[1] ** 4, [3.0, 3.0], cfg)
    assert not res.converged
    assert isinstance(res, OptimResult)


def test_optim_config_validation():
    with pytest.raises(DataError):
        OptimConfig(max_iters=0)
    with pytest.raises(DataError):
        OptimConfig(x_tol=0.0)
    with pytest.raises(DataError):
        OptimConfig(f_tol=-1.0)
    with pytest.raises(DataError):
        OptimConfig(restarts=-1)
    with pytest.raises(DataError):
        OptimConfig(initial_simplex_scale=0.0)
    with pytest.raises(DataError):
        OptimConfig(max_iters=10.5)
