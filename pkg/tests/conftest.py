import functools
import math

import pytest

from pmclab import Mode, StackProblem, solve

TOUCH_1 = 2.0 - math.sqrt(3.0)


@functools.lru_cache(maxsize=None)
def solved(mode: str, c: float, eps: float, n: int):
    """Cached converged solve; reports are treated as read-only by tests."""
    return solve(StackProblem(c=c, eps=eps, n=n, mode=Mode(mode)))


@pytest.fixture
def solver_cache():
    return solved
