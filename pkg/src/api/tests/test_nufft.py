import numpy as np
import pytest

from calculations import nufft
from calculations.benchmarks import gen_dataset, rng
from calculations.fourier_grid import FourierGrid
from calculations.kernels import PointSet
from helpers.errors import InvalidToleranceError, ShapeError


def _relative(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_spread_width():
    assert nufft.spread_width(1e-7) == 8
    assert nufft.spread_width(1e-4) == 5
    assert nufft.spread_width(0.5) == 2
    with pytest.raises(InvalidToleranceError):
        nufft.spread_width(1e-16)


def test_fine_grid_is_even_and_oversampled():
    for n_modes in (3, 101, 801):
        nf = nufft.fine_grid_size(n_modes, 8)
        assert nf % 2 == 0
        assert nf >= 2 * n_modes


def test_plan_is_deterministic():
    pts = gen_dataset(2, 50, 3)
    grid = FourierGrid(10, 0.1, 2)
    first, second = nufft.plan(pts, grid, 1e-6), nufft.plan(pts, grid, 1e-6)
    assert (first.spread_width, first.fine_size, first.shape_param) == (
        second.spread_width, second.fine_size, second.shape_param,
    )
    np.testing.assert_array_equal(first.correction, second.correction)


def test_plan_dimension_mismatch():
    with pytest.raises(ShapeError):
        nufft.plan(gen_dataset(1, 10, 0), FourierGrid(4, 0.1, 2), 1e-6)


def test_type1_single_point_at_origin():
    pts = PointSet(np.array([[0.0]]))
    grid = FourierGrid(8, 0.1, 1)
    out = nufft.type1(nufft.plan(pts, grid, 1e-10), np.array([1.0]))
    np.testing.assert_allclose(out, 1.0, atol=1e-9)


def test_type1_symmetric_pair():
    pts = PointSet(np.array([[-0.25], [0.25]]))
    grid = FourierGrid(2, 1.0, 1)
    out = nufft.type1(nufft.plan(pts, grid, 1e-10), np.array([1.0, 1.0]))
    np.testing.assert_allclose(out, [-2.0, 0.0, 2.0, 0.0, -2.0], atol=1e-8)


def test_type2_zero_mode_indicator():
    pts = gen_dataset(1, 40, 2)
    grid = FourierGrid(5, 0.1, 1)
    a = np.zeros(grid.shape)
    a[5] = 1.0
    np.testing.assert_allclose(nufft.type2(nufft.plan(pts, grid, 1e-10), a), 1.0, atol=1e-9)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("tol", [1e-4, 1e-7, 1e-10])
def test_transforms_match_direct_summation(dim, tol):
    pts = gen_dataset(dim, 500, 21)
    grid = FourierGrid(50 if dim == 1 else 20, 0.1, dim)
    plan = nufft.plan(pts, grid, tol)
    generator = rng(21, 1)
    c = generator.standard_normal(pts.n) + 1j * generator.standard_normal(pts.n)
    a = generator.standard_normal(grid.shape) + 1j * generator.standard_normal(grid.shape)

    assert _relative(nufft.type1(plan, c), nufft.direct_type1(pts, grid, c)) <= 10 * tol
    assert _relative(nufft.type2(plan, a), nufft.direct_type2(pts, grid, a)) <= 10 * tol


@pytest.mark.parametrize("seed", range(20))
def test_type1_and_type2_are_adjoint(seed):
    pts = gen_dataset(2, 300, seed)
    grid = FourierGrid(12, 0.1, 2)
    plan = nufft.plan(pts, grid, 1e-6)
    generator = rng(seed, 1)
    c = generator.standard_normal(pts.n) + 1j * generator.standard_normal(pts.n)
    a = generator.standard_normal(grid.shape) + 1j * generator.standard_normal(grid.shape)
    lhs = np.vdot(a, nufft.type1(plan, c))
    rhs = np.vdot(nufft.type2(plan, a), c)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_uncached_plan_matches_cached():
    pts = gen_dataset(1, 200, 9)
    grid = FourierGrid(30, 0.1, 1)
    c = rng(9, 1).standard_normal(pts.n)
    cached = nufft.plan(pts, grid, 1e-8)
    streamed = nufft.plan(pts, grid, 1e-8, cache_entries=0)
    assert cached.cache is not None and streamed.cache is None
    np.testing.assert_allclose(nufft.type1(streamed, c), nufft.type1(cached, c), rtol=1e-13, atol=1e-13)


def test_batched_transforms_match_single():
    pts = gen_dataset(1, 100, 10)
    grid = FourierGrid(16, 0.1, 1)
    plan = nufft.plan(pts, grid, 1e-8)
    batch = rng(10, 1).standard_normal((3, pts.n))
    out = nufft.type1(plan, batch)
    assert out.shape == (3,) + grid.shape
    np.testing.assert_allclose(out[1], nufft.type1(plan, batch[1]), rtol=1e-13, atol=1e-13)

    back = nufft.type2(plan, out)
    assert back.shape == (3, pts.n)


def test_type2_rejects_wrong_shape():
    plan = nufft.plan(gen_dataset(1, 10, 0), FourierGrid(4, 0.1, 1), 1e-6)
    with pytest.raises(ShapeError):
        nufft.type2(plan, np.zeros(7))


def test_type1_is_linear():
    pts = gen_dataset(2, 200, 11)
    grid = FourierGrid(10, 0.1, 2)
    plan = nufft.plan(pts, grid, 1e-8)
    generator = rng(11, 1)
    c1 = generator.standard_normal(pts.n) + 1j * generator.standard_normal(pts.n)
    c2 = generator.standard_normal(pts.n)
    a, b = 2.5 - 1.0j, -0.75

    combined = nufft.type1(plan, a * c1 + b * c2)
    separate = a * nufft.type1(plan, c1) + b * nufft.type1(plan, c2)
    assert _relative(combined, separate) <= 1e-12


def test_type2_after_type1_is_not_the_identity():
    pts = gen_dataset(1, 100, 12)
    grid = FourierGrid(20, 0.1, 1)
    plan = nufft.plan(pts, grid, 1e-10)
    c = rng(12, 1).standard_normal(pts.n)

    round_trip = nufft.type2(plan, nufft.type1(plan, c))
    assert _relative(round_trip, c) > 0.1
    direct = nufft.direct_type2(pts, grid, nufft.direct_type1(pts, grid, c))
    assert _relative(round_trip, direct) <= 1e-8
