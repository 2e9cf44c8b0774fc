import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from alphawidth import zoo
from alphawidth.extgrid import (CONVEX, MASS, GridError, GridFn, GridSpec, gradient_central, integrate,
                                integrate_with_error, interpolate, is_discretely_convex, sample)


def test_sample_indicator_both_sides():
    spec = GridSpec.box(-2, 2, 5)
    k = zoo.Indicator((-1.0,), (1.0,))
    assert sample(k, spec, MASS).values.tolist() == [0, 1, 1, 1, 0]
    assert sample(k, spec, CONVEX).values.tolist() == [math.inf, 0, 0, 0, math.inf]


def test_sample_quadratic_plain_callable():
    spec = GridSpec.box(-2, 2, 5)
    f = sample(lambda p: p[..., 0] ** 2 / 2, spec, CONVEX)
    assert f.values.tolist() == [2, 0.5, 0, 0.5, 2]


def test_sample_rejects_bad_values_with_index():
    spec = GridSpec.box(-2, 2, 5)
    with pytest.raises(GridError, match=r"\(1,\)"):
        sample(lambda p: np.where(p[..., 0] == -1, -1.0, 1.0), spec, MASS)
    with pytest.raises(GridError, match=r"\(4,\)"):
        sample(lambda p: np.where(p[..., 0] == 2, -np.inf, 0.0), spec, CONVEX)


@pytest.mark.parametrize("bad", [
    dict(lo=(0.0,), hi=(0.0,), m=(5,)),
    dict(lo=(0.0,), hi=(1.0,), m=(2,)),
    dict(lo=(0.0,) * 3, hi=(1.0,) * 3, m=(3,) * 3),
])
def test_gridspec_validation(bad):
    with pytest.raises(GridError):
        GridSpec(**bad)


def test_gridfn_validation():
    spec = GridSpec.box(0, 1, 3)
    with pytest.raises(GridError):
        GridFn(spec, MASS, [0, 0, 0])
    with pytest.raises(GridError):
        GridFn(spec, MASS, [0, math.inf, 1])
    with pytest.raises(GridError):
        GridFn(spec, CONVEX, [math.inf] * 3)
    with pytest.raises(GridError):
        GridFn(spec, CONVEX, [0, math.nan, 1])
    f = GridFn(spec, CONVEX, [math.inf, 0, 1])
    with pytest.raises(ValueError):
        f.values[0] = 1.0


@given(st.floats(-50, 50), st.floats(0.01, 50), st.integers(3, 5000))
def test_affine_indexing_is_exact(lo, width, m):
    spec = GridSpec.box(lo, lo + width, m)
    ax = spec.axis(0)
    k = np.arange(m)
    assert np.array_equal(ax, spec.lo[0] + k * spec.h[0])


def test_integrate_indicator_volume():
    spec = GridSpec.box(-2, 2, 4097)
    assert abs(integrate(sample(zoo.Indicator((-1.0,), (1.0,)), spec)) - 2.0) <= spec.h[0]


def test_integrate_gaussian():
    spec = GridSpec.box(-10, 10, 8193)
    assert integrate(sample(zoo.GAlpha(math.inf), spec)) == pytest.approx(math.sqrt(2 * math.pi), abs=1e-6)


def test_integrate_heavy_tail_beta_2():
    spec = GridSpec.box(-400, 400, 160001)
    assert integrate(sample(zoo.GAlpha(2.0), spec)) == pytest.approx(math.pi, abs=1e-3)


def test_integrate_rejects_convex_side():
    with pytest.raises(TypeError):
        integrate(GridFn(GridSpec.box(0, 1, 3), CONVEX, [0, 0, 0]))


@given(st.floats(0.01, 5), st.floats(0, 5), st.integers(0, 2 ** 32 - 1))
def test_integrate_linear(a, b, seed):
    spec = GridSpec.box(-3, 3, 301)
    r = np.random.default_rng(seed)
    f, g = r.uniform(0.1, 1, spec.m), r.uniform(0.1, 1, spec.m)
    lhs = integrate(GridFn(spec, MASS, a * f + b * g))
    rhs = a * integrate(GridFn(spec, MASS, f)) + b * integrate(GridFn(spec, MASS, g))
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)


@given(st.floats(-3, -0.1), st.floats(0.1, 3), st.sampled_from([101, 257, 1000, 2049]))
def test_box_volume_within_one_cell(lo, hi, m):
    spec = GridSpec.box(-4, 4, m)
    val = integrate(sample(zoo.Indicator((lo,), (hi,)), spec))
    assert abs(val - (hi - lo)) <= spec.h[0] + 1e-12


def test_box_volume_2d():
    spec = GridSpec.box(-2, 2, 201, dim=2)
    val = integrate(sample(zoo.Indicator((-1.0, -0.5), (1.0, 0.25)), spec))
    assert abs(val - 1.5) <= 2 * spec.h[0] * (2 + 0.75)


def test_refinement_order_two():
    errs = []
    for m in (101, 201, 401):
        spec = GridSpec.box(-3, 2, m)
        exact = math.sqrt(math.pi / 2) * (math.erf(2 / math.sqrt(2)) + math.erf(3 / math.sqrt(2)))
        errs.append(abs(integrate(sample(zoo.GAlpha(math.inf), spec)) - exact))
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


def test_step_doubling_error_bounds_true_error():
    spec = GridSpec.box(-3, 2, 201)
    exact = math.sqrt(math.pi / 2) * (math.erf(2 / math.sqrt(2)) + math.erf(3 / math.sqrt(2)))
    val, err = integrate_with_error(sample(zoo.GAlpha(math.inf), spec))
    assert abs(val - exact) <= err


def test_descriptor_dimension_mismatch():
    with pytest.raises(ValueError, match="2D"):
        sample(zoo.Indicator((-1.0, -0.5), (1.0, 0.25)), GridSpec.box(-2, 2, 5))


def test_gradient_linear_and_quadratic_exact():
    spec = GridSpec.box(-3, 5, 97)
    x = spec.axis(0)
    g = gradient_central(sample(lambda p: 3 * p[..., 0] - 1, spec, CONVEX))
    assert np.allclose(g[0], 3.0, atol=1e-12)
    g = gradient_central(sample(lambda p: p[..., 0] ** 2 / 2, spec, CONVEX))
    assert np.allclose(g[0][1:-1], x[1:-1], atol=1e-12)


def test_gradient_cos_taylor_bound():
    spec = GridSpec.box(-8, 8, 4097)
    x = spec.axis(0)
    h = spec.h[0]
    g = gradient_central(sample(lambda p: np.cos(p[..., 0]), spec, CONVEX))[0]
    assert np.max(np.abs(g[1:-1] + np.sin(x[1:-1]))) <= h ** 2 / 6


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-5, 5))
def test_gradient_affine_2d(a, b, c):
    spec = GridSpec((-1.0, -2.0), (2.0, 1.0), (31, 17))
    g = gradient_central(sample(lambda p: a * p[..., 0] + b * p[..., 1] + c, spec, CONVEX))
    assert np.allclose(g[0], a, atol=1e-10) and np.allclose(g[1], b, atol=1e-10)


def test_gradient_rejects_infinite():
    spec = GridSpec.box(-1, 1, 5)
    with pytest.raises(GridError):
        gradient_central(sample(zoo.Indicator((-0.5,), (0.5,)), spec, CONVEX))


def test_interpolate_blocks_infinite_corners():
    spec = GridSpec.box(0, 4, 5)
    f = GridFn(spec, CONVEX, [math.inf, 0, 1, 2, math.inf])
    vals, outside = interpolate(f, np.array([[0.5], [1.0], [1.5], [3.0], [3.5], [5.0]]))
    assert vals.tolist() == [math.inf, 0.0, 0.5, 2.0, math.inf, math.inf]
    assert outside


def test_coarsen_and_zero():
    spec = GridSpec.box(-2, 2, 9)
    assert spec.zero_index() == (4,)
    assert spec.coarsen() == GridSpec.box(-2, 2, 5)
    assert GridSpec.box(-2, 2, 8).coarsen() is None
    with pytest.raises(GridError):
        GridSpec.box(-1, 2, 5).zero_index()


def test_discrete_convexity():
    spec = GridSpec.box(-2, 2, 9)
    assert is_discretely_convex(sample(lambda p: p[..., 0] ** 2, spec, CONVEX))
    assert not is_discretely_convex(sample(lambda p: -p[..., 0] ** 2, spec, CONVEX))
    gap = np.array([0, 0, math.inf, 0, 0, 0, 0, 0, 0.0])
    assert not is_discretely_convex(GridFn(spec, CONVEX, gap))
