import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from handleforge import BuildOptions, build_inner_handle, build_outer_handle, \
    build_quadratic_handle
from handleforge.profiles import CallableProfile


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def spline_profile(rng, lo=0.5, hi=2.0, n_knots=8, floor=0.05,
                   band=(0.6, 1.8)):
    """Random positive C^2 cubic-spline profile on [lo, hi]."""
    for _ in range(50):
        xs = np.linspace(lo, hi, n_knots)
        ys = rng.uniform(band[0], band[1], size=n_knots)
        cs = CubicSpline(xs, ys)
        if cs(np.linspace(lo, hi, 201)).min() > floor:
            d1, d2 = cs.derivative(1), cs.derivative(2)
            return CallableProfile(
                lambda t, f=cs: float(f(t)),
                lambda t, f=d1: float(f(t)),
                lambda t, f=d2: float(f(t)),
                (lo, hi), breakpoints=xs[1:-1].tolist())
    raise RuntimeError("no positive spline found")


@pytest.fixture(scope="session")
def outer_relaxed():
    return build_outer_handle(2.0, 1.0, 0.5, BuildOptions(relax=True))


@pytest.fixture(scope="session")
def inner_half():
    return build_inner_handle(0.5, 0.5)


@pytest.fixture(scope="session")
def quadratic_example():
    return build_quadratic_handle([[2.0]], [[1.0]], 1.0, 0.5)
