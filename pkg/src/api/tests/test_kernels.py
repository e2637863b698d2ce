import numpy as np
import pytest

from calculations.benchmarks import SIGMA_REF_MAX, SIGMA_REF_MIN, gen_dataset, rng, sigma_ref
from calculations.kernels import (
    ConstantField,
    KernelSpec,
    Matern,
    PointSet,
    SquaredExponential,
    dense_kernel_matrix,
    dense_matvec,
    derived_constants,
    kernel_eval,
    matern_phi,
)
from calculations.matvec import ApproxParams
from calculations.quadrature import chi_u_v, default_t_range
from helpers.errors import DomainError, OracleSizeError, ShapeError, UnsupportedParameterError


def test_point_set_accepts_vector_as_one_dimensional():
    pts = PointSet(np.array([-0.5, 0.0, 0.5]))
    assert pts.n == 3
    assert pts.dim == 1


def test_point_set_names_the_point_outside_the_box():
    with pytest.raises(DomainError, match="point 2"):
        PointSet(np.array([[0.0, 0.0], [0.5, 0.5], [1.2, 0.0]]))


def test_point_set_rejects_four_dimensions():
    with pytest.raises(ShapeError):
        PointSet(np.zeros((3, 4)))


def test_matern_closed_forms():
    assert matern_phi(0.5, 1.0) == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert matern_phi(1.5, 0.0) == 1.0
    assert matern_phi(1.5, 2.0) == pytest.approx((1 + 2 * np.sqrt(3)) * np.exp(-2 * np.sqrt(3)), rel=1e-12)
    assert matern_phi(1.5, 2.0) == pytest.approx(0.13973, abs=1e-5)


def test_matern_bessel_matches_closed_form():
    r = np.linspace(0.0, 6.0, 41)
    for nu in (0.5, 1.5, 2.5, 3.5):
        np.testing.assert_allclose(matern_phi(nu, r, "bessel"), matern_phi(nu, r), rtol=1e-10, atol=1e-14)


def test_matern_quadrature_oracle_matches_bessel():
    assert matern_phi(1.0, 1.0, "quadrature_oracle") == pytest.approx(matern_phi(1.0, 1.0, "bessel"), abs=1e-8)


def test_matern_rejects_unsupported_inputs():
    with pytest.raises(UnsupportedParameterError):
        matern_phi(1.0, 1.0, "closed_form")
    with pytest.raises(UnsupportedParameterError):
        matern_phi(-1.0, 1.0, "bessel")
    with pytest.raises(DomainError):
        matern_phi(1.5, -0.1)


def test_kernel_eval_on_the_diagonal():
    spec = KernelSpec.constant(Matern(1.5), 0.5)
    assert kernel_eval(spec, [0.2], [0.2]) == pytest.approx(np.pi ** -0.5, rel=1e-12)


def test_kernel_eval_exponential_kernel():
    spec = KernelSpec.constant(Matern(0.5), 0.5)
    expected = np.pi ** -0.5 * np.exp(-0.3 / (0.5 * np.sqrt(2)))
    assert kernel_eval(spec, [0.0], [0.3]) == pytest.approx(expected, rel=1e-12)


def test_kernel_eval_zero_weight():
    spec = KernelSpec.constant(Matern(1.5), 0.5, weight=0.0)
    assert kernel_eval(spec, [0.1], [-0.4]) == 0.0


def test_sigma_out_of_bounds_names_the_point():
    spec = KernelSpec(Matern(1.5), sigma_ref, ConstantField(1.0), 0.3, 0.5)
    pts = PointSet(np.array([[0.0], [1.0]]))
    with pytest.raises(DomainError, match="point 1"):
        dense_kernel_matrix(spec, pts)


def test_dense_matrix_is_bitwise_symmetric():
    spec = KernelSpec(Matern(1.5), sigma_ref, ConstantField(1.0), SIGMA_REF_MIN, SIGMA_REF_MAX)
    matrix = dense_kernel_matrix(spec, gen_dataset(2, 120, 4))
    assert np.array_equal(matrix, matrix.T)


def test_dense_matrix_single_point():
    spec = KernelSpec.constant(SquaredExponential(), 0.5)
    pts = PointSet(np.array([[0.25]]))
    matrix = dense_kernel_matrix(spec, pts)
    assert matrix.shape == (1, 1)
    assert matrix[0, 0] == pytest.approx(kernel_eval(spec, [0.25], [0.25]))


def test_dense_matrix_is_positive_semidefinite():
    spec = KernelSpec.constant(Matern(1.5), 0.3)
    eigenvalues = np.linalg.eigvalsh(dense_kernel_matrix(spec, gen_dataset(1, 300, 8)))
    assert eigenvalues.min() >= -1e-10 * eigenvalues.max()


def test_dense_matvec_rows_match_full_product():
    spec = KernelSpec(Matern(2.5), sigma_ref, ConstantField(1.0), SIGMA_REF_MIN, SIGMA_REF_MAX)
    pts = gen_dataset(2, 90, 5)
    alpha = np.linspace(-1.0, 1.0, pts.n)
    full = dense_kernel_matrix(spec, pts) @ alpha
    np.testing.assert_allclose(dense_matvec(spec, pts, alpha), full, rtol=1e-12)
    np.testing.assert_allclose(dense_matvec(spec, pts, alpha, rows=[3, 7]), full[[3, 7]], rtol=1e-12)


def test_oracle_cap_is_enforced():
    spec = KernelSpec.constant(Matern(1.5), 0.3)
    with pytest.raises(OracleSizeError):
        dense_kernel_matrix(spec, gen_dataset(1, 50, 0), oracle_cap=10)


def test_derived_constants():
    matern = KernelSpec(Matern(1.5), ConstantField(2.0), ConstantField(1.0), 1.0, 3.0)
    consts = derived_constants(matern, ApproxParams(-5.0, 0.0, 10, 4, 10, 0.1, 1e-7))
    assert consts.kappa == 3.0
    assert consts.chi_max == pytest.approx(1 / np.sqrt(1.5))

    sqexp = KernelSpec(SquaredExponential(), ConstantField(2.0), ConstantField(1.0), 1.0, 3.0)
    consts = derived_constants(sqexp, ApproxParams(0.0, 0.0, 0, 4, 10, 0.1, 1e-7))
    assert (consts.chi_min, consts.chi_max) == (1.0, 1.0)
    assert (consts.rho_min, consts.rho_max) == (1.0, 3.0)


def test_weight_above_one_warns(caplog):
    spec = KernelSpec.constant(Matern(1.5), 0.3, weight=2.0)
    kernel_eval(spec, [0.0], [0.1])
    assert "exceeds 1" in caplog.text


def test_constant_sigma_depends_only_on_distance():
    spec = KernelSpec.constant(Matern(2.5), 0.3)
    generator = rng(31, 0)
    for _ in range(20):
        x = generator.uniform(-0.5, 0.5, 2)
        y = generator.uniform(-0.5, 0.5, 2)
        shift = generator.uniform(-0.5, 0.5, 2)
        reference = kernel_eval(spec, x, y)
        assert kernel_eval(spec, x + shift, y + shift) == pytest.approx(reference, rel=1e-14)

        angle = generator.uniform(0.0, 2.0 * np.pi)
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        assert kernel_eval(spec, np.zeros(2), rotation @ (y - x)) == pytest.approx(reference, rel=1e-12)


def _gaussian_overlap(x, y, a, b):
    """Trapezoid over z of exp(-(x-z)^2 / 2a^2) exp(-(y-z)^2 / 2b^2), one column per width pair."""
    centre = (b ** 2 * x + a ** 2 * y) / (a ** 2 + b ** 2)
    width = a * b / np.sqrt(a ** 2 + b ** 2)
    offsets = np.linspace(-12.0, 12.0, 193)
    z = centre[None, :] + width[None, :] * offsets[:, None]
    values = np.exp(-(x - z) ** 2 / (2 * a ** 2) - (y - z) ** 2 / (2 * b ** 2))
    return np.trapezoid(values, z, axis=0)


def test_gaussian_mixture_identity_matches_kernel():
    nu, dim = 1.5, 2
    spec = KernelSpec(Matern(nu), sigma_ref, ConstantField(1.0), SIGMA_REF_MIN, SIGMA_REF_MAX)
    t_min, t_max, _ = default_t_range(1e-14, nu)
    t = np.linspace(t_min, t_max, int(np.ceil((t_max - t_min) / 0.05)) + 1)
    chi, _, v = chi_u_v(nu, t, dim)

    pairs = gen_dataset(dim, 40, 32).points.reshape(20, 2, dim)
    for x, y in pairs:
        sx, sy = spec.sigma_at(np.vstack([x, y]))
        a, b = sx * chi, sy * chi
        overlap = np.prod([_gaussian_overlap(x[i], y[i], a, b) for i in range(dim)], axis=0)
        prefactor = (2 * np.pi * sx ** 2) ** (-dim / 2) * (2 * np.pi * sy ** 2) ** (-dim / 2)
        mixture = prefactor * np.trapezoid(v * overlap, t)
        assert mixture == pytest.approx(kernel_eval(spec, x, y), rel=1e-8, abs=1e-10)
