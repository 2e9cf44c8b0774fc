import math
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from alphawidth.extgrid import CONVEX, GridFn, GridSpec

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_convex_1d(rng: np.random.Generator, x: np.ndarray, kinks: int = 3) -> np.ndarray:
    """Strongly convex test function: quadratic + affine + a few absolute-value kinks."""
    a = rng.uniform(0.5, 2.0)
    b, c = rng.uniform(-1, 1, 2)
    vals = a * x ** 2 / 2 + b * x + c
    for w, k in zip(rng.uniform(0.1, 1.0, kinks), rng.uniform(x[0] / 2, x[-1] / 2, kinks)):
        vals = vals + w * np.abs(x - k)
    return vals


def brute_conjugate(x: np.ndarray, f: np.ndarray, y: np.ndarray) -> np.ndarray:
    """O(m * k) oracle: max over all finite nodes of x*y - f."""
    fin = np.isfinite(f)
    return np.max(np.outer(y, x[fin]) - f[fin][None, :], axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def line():
    return GridSpec.box(-4.0, 4.0, 801)


def convex_fn(spec: GridSpec, values) -> GridFn:
    return GridFn(spec, CONVEX, np.asarray(values, dtype=float))


INF = math.inf


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion lines, which fd-level capture would otherwise hide."""
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
