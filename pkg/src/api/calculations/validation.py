"""
Desk-scale property suites run by the `validate` command. Each suite returns
a short detail string and raises AssertionError on failure.
"""

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from calculations import matvec, nufft
from calculations.benchmarks import SIGMA_REF_MAX, SIGMA_REF_MIN, gen_dataset, rng, sigma_ref
from calculations.calculations import app
from calculations.chebyshev import basis_matrix, cheb_nodes, eps_cheb
from calculations.error_model import explicit_params, select_params
from calculations.fourier_grid import FourierGrid, build_coupling
from calculations.gpr import Observations, cg_solve
from calculations.kernels import (
    ConstantField,
    KernelSpec,
    Matern,
    SquaredExponential,
    dense_kernel_matrix,
    dense_matvec,
    matern_phi,
)
from calculations.quadrature import build_scheme, default_t_range, reconstruct_phi

logger = logging.getLogger(__name__)

SUITES = []


@dataclass
class SuiteResult:
    name: str
    passed: bool
    seconds: float
    detail: str


def suite(func):
    SUITES.append(func)
    return func


def _sigma_ref_spec(family):
    return KernelSpec(family, sigma_ref, ConstantField(1.0), SIGMA_REF_MIN, SIGMA_REF_MAX)


def _relative(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@suite
def kernel_symmetry():
    spec = _sigma_ref_spec(Matern(1.5))
    matrix = dense_kernel_matrix(spec, gen_dataset(2, 150, 3))
    assert np.array_equal(matrix, matrix.T), "dense kernel matrix is not symmetric"
    assert np.all(np.diag(matrix) > 0), "diagonal has non-positive entries"
    return "dense matrix symmetric with positive diagonal"


@suite
def phi_reconstruction():
    radii = np.linspace(0.0, 5.0, 50)
    worst = 0.0
    for nu in (0.5, 1.5, 2.5):
        t_min, t_max, n_t = default_t_range(1e-8, nu)
        scheme = build_scheme(Matern(nu), t_min, t_max, n_t, 1)
        error = np.abs(reconstruct_phi(scheme, nu, radii) - matern_phi(nu, radii)).max()
        worst = max(worst, float(error))
    assert worst <= 1e-6, f"phi reconstruction error {worst:.2e}"
    return f"max abs error {worst:.2e}"


@suite
def chebyshev_bound():
    generator = rng(11, 0)
    kappa = SIGMA_REF_MAX / SIGMA_REF_MIN
    for n_sigma in (5, 10, 20):
        basis = cheb_nodes(SIGMA_REF_MIN, SIGMA_REF_MAX, n_sigma)
        sigma = generator.uniform(SIGMA_REF_MIN, SIGMA_REF_MAX, 100)
        x = generator.uniform(-3.0, 3.0, 100)
        exact = np.exp(-x ** 2 / (2 * sigma ** 2))
        nodal = np.exp(-x[None, :] ** 2 / (2 * basis.nodes[:, None] ** 2))
        approx = (basis_matrix(basis, sigma) * nodal).sum(axis=0)
        bound = eps_cheb(n_sigma, kappa)
        assert np.all(np.abs(exact - approx) <= bound), f"interpolation bound violated at N_sigma={n_sigma}"
    return "interpolation error within bound for N_sigma in {5, 10, 20}"


@suite
def nufft_direct():
    tol = 1e-7
    worst = 0.0
    for dim in (1, 2):
        pts = gen_dataset(dim, 200, 5)
        grid = FourierGrid(20, 0.5, dim)
        plan = nufft.plan(pts, grid, tol)
        generator = rng(5, dim)
        c = generator.standard_normal(pts.n) + 1j * generator.standard_normal(pts.n)
        a = generator.standard_normal(grid.shape) + 1j * generator.standard_normal(grid.shape)
        worst = max(
            worst,
            _relative(nufft.type1(plan, c), nufft.direct_type1(pts, grid, c)),
            _relative(nufft.type2(plan, a), nufft.direct_type2(pts, grid, a)),
        )
        lhs = np.vdot(a, nufft.type1(plan, c))
        rhs = np.vdot(nufft.type2(plan, a), c)
        assert abs(lhs - rhs) <= 10 * tol * abs(lhs), "type 1 and type 2 are not adjoint"
    assert worst <= 10 * tol, f"NUFFT error {worst:.2e} above 10x tolerance"
    return f"max relative error {worst:.2e}"


@suite
def coupling_bruteforce():
    nu, dim = 1.5, 1
    scheme = build_scheme(Matern(nu), -2.0, 1.0, 3, dim)
    basis = cheb_nodes(0.2, 0.5, 2)
    grid = FourierGrid(4, 0.125, dim)
    tensor = build_coupling(scheme, basis, grid).values

    omega = grid.indices() * grid.delta_omega
    for kp, sigma_p in enumerate(basis.nodes):
        for k, sigma in enumerate(basis.nodes):
            expected = np.zeros(grid.n_modes)
            for chi, v in zip(scheme.chi_nodes, scheme.v_weights):
                g_p = np.sqrt(2 * np.pi) * sigma_p * chi * np.exp(-2 * np.pi ** 2 * (sigma_p * chi) ** 2 * omega ** 2)
                g = np.sqrt(2 * np.pi) * sigma * chi * np.exp(-2 * np.pi ** 2 * (sigma * chi) ** 2 * omega ** 2)
                expected += grid.delta_omega * v * g_p * g
            assert np.allclose(tensor[kp, k], expected, rtol=1e-12, atol=0), "coupling tensor mismatch"
    return "coupling tensor equals the direct triple sum"


@suite
def matvec_against_dense():
    spec = _sigma_ref_spec(Matern(1.5))
    pts = gen_dataset(1, 400, 7)
    params = explicit_params(spec, 1, 20, 20, 400)
    plan = matvec.build(spec, pts, params)
    alpha = rng(7, 1).random(pts.n)
    error = _relative(matvec.apply(plan, alpha), dense_matvec(spec, pts, alpha))
    assert error <= 1e-4, f"matvec error {error:.2e}"
    return f"relative error {error:.2e} ({plan.strategy})"


@suite
def strategies_agree():
    spec = _sigma_ref_spec(Matern(1.5))
    pts = gen_dataset(2, 300, 9)
    params = explicit_params(spec, 2, 8, 6, 30)
    alpha = rng(9, 1).random(pts.n)
    coupled = matvec.apply(matvec.build(spec, pts, params, strategy="coupled"), alpha)
    streaming = matvec.apply(matvec.build(spec, pts, params, strategy="streaming"), alpha)
    difference = _relative(coupled, streaming)
    assert difference <= 1e-10, f"coupled and streaming differ by {difference:.2e}"
    return f"relative difference {difference:.2e}"


@suite
def approximate_matrix_psd():
    worst = np.inf
    for family in (Matern(1.5), SquaredExponential()):
        spec = _sigma_ref_spec(family)
        pts = gen_dataset(1, 100, 13)
        params = explicit_params(spec, 1, None if isinstance(family, Matern) else 0, 12, 60)
        matrix = matvec.reconstruct_matrix(matvec.build(spec, pts, params))
        eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
        ratio = eigenvalues.min() / eigenvalues.max()
        worst = min(worst, float(ratio))
        assert ratio >= -1e-6, f"approximate matrix has eigenvalue ratio {ratio:.2e}"
    return f"min/max eigenvalue ratio {worst:.2e}"


@suite
def solve_against_dense():
    spec = _sigma_ref_spec(SquaredExponential())
    pts = gen_dataset(1, 150, 17)
    params = explicit_params(spec, 1, 0, 30, 80, eps=1e-10)
    plan = matvec.build(spec, pts, params)
    y = rng(17, 1).random(pts.n)
    report = cg_solve(plan, Observations(y, 0.1), tol=1e-8)
    exact = np.linalg.solve(dense_kernel_matrix(spec, pts) + 0.1 * np.eye(pts.n), y)
    error = _relative(report.alpha, exact)
    assert report.converged and error <= 1e-4, f"solve error {error:.2e}"
    return f"{report.iterations} iterations, relative error {error:.2e}"


@suite
def squared_exponential_path():
    spec = KernelSpec.constant(SquaredExponential(), 0.3)
    pts = gen_dataset(1, 500, 19)
    params = select_params(1e-6, spec, 1)
    plan = matvec.build(spec, pts, params)
    alpha = rng(19, 1).random(pts.n)
    error = _relative(matvec.apply(plan, alpha), dense_matvec(spec, pts, alpha))
    assert error <= 1e-5, f"squared-exponential error {error:.2e}"
    return f"relative error {error:.2e} at M={params.M}"


def run_validate(suites=None) -> list[SuiteResult]:
    results = []
    for func in suites or SUITES:
        start = time.perf_counter()
        try:
            detail, passed = func(), True
        except Exception as e:
            detail, passed = f"{type(e).__name__}: {e}", False
        seconds = time.perf_counter() - start
        level = logging.INFO if passed else logging.ERROR
        logger.log(level, f"{func.__name__}: {'pass' if passed else 'FAIL'} in {seconds:.2f}s ({detail})")
        results.append(SuiteResult(func.__name__, passed, seconds, detail))
    return results


@app.task(name="validate", bind=True)
def validate_task(self):
    return [asdict(result) for result in run_validate()]
