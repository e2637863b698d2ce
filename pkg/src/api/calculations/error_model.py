"""
Computable error indicators for the three approximation stages and the
parameter auto-selection that splits a target tolerance evenly between them.

The composite bound sets every suppressed constant to one, so it is an
indicator of which stage dominates rather than a guarantee.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from calculations.chebyshev import cheb_nodes, eps_cheb, lebesgue_estimate
from calculations.fourier_grid import MAX_DELTA_OMEGA, FourierGrid, default_grid, eps_F
from calculations.kernels import DerivedConstants, KernelSpec, derived_constants
from calculations.matvec import ApproxParams
from calculations.quadrature import default_t_range
from helpers.config import settings
from helpers.errors import InvalidToleranceError, UsageError

logger = logging.getLogger(__name__)

TRAP_DELTA = 0.1
MAX_N_SIGMA = 256
MAX_DELTA_T = 1.0


@dataclass(frozen=True)
class ErrorBudget:
    eps_trap: float
    eps_cheb: float
    eps_F: float
    term_trap: float
    term_cheb: float
    term_F: float
    total: float


def eps_trap(t_min: float, t_max: float, n_t: int, nu: float, alpha: float | None = None,
             delta: float = TRAP_DELTA) -> float:
    if n_t < 1:
        raise UsageError(f"N_t must be at least 1, got {n_t}")
    if not 0 < delta < 1:
        raise UsageError(f"delta must lie in (0, 1), got {delta}")
    alpha = nu if alpha is None else alpha
    delta_t = (t_max - t_min) / n_t
    discretisation = np.exp(-(1.0 - delta) * np.pi ** 2 / delta_t) if delta_t > 0 else 0.0
    return float(np.exp(-alpha * t_max) + np.exp(nu * t_min) + discretisation)


def _fourier_prefactor(n_sigma, consts, sigma_min, dim):
    return n_sigma ** 2 * consts.kappa ** dim * (consts.chi_max / sigma_min) ** dim


def theorem_bound(spec: KernelSpec, params: ApproxParams, consts: DerivedConstants,
                  lebesgue: float, dim: int) -> ErrorBudget:
    grid = FourierGrid(params.M, params.delta_omega, dim)
    if spec.is_squared_exponential:
        trap = 0.0
    else:
        delta_t = (params.t_max - params.t_min) / params.n_t
        if delta_t > MAX_DELTA_T:
            logger.warning(f"quadrature spacing {delta_t:.3g} is large; the bound assumes an O(1) spacing")
        trap = eps_trap(params.t_min, params.t_max, params.n_t, spec.family.nu)
    if params.delta_omega > MAX_DELTA_OMEGA:
        logger.warning("the bound assumes a grid spacing of at most 1/8")

    cheb = eps_cheb(params.n_sigma, consts.kappa)
    fourier = eps_F(grid, consts)

    term_trap = spec.sigma_min ** -dim * trap
    term_cheb = lebesgue * consts.rho_max ** dim * cheb
    term_F = _fourier_prefactor(params.n_sigma, consts, spec.sigma_min, dim) * fourier
    return ErrorBudget(
        eps_trap=trap,
        eps_cheb=cheb,
        eps_F=fourier,
        term_trap=float(term_trap),
        term_cheb=float(term_cheb),
        term_F=float(term_F),
        total=float(term_trap + term_cheb + term_F),
    )


def _t_range(spec, eps, n_t=None):
    if spec.is_squared_exponential:
        if n_t not in (None, 0):
            raise UsageError("the squared-exponential kernel takes N_t = 0")
        return 0.0, 0.0, 0
    t_min, t_max, default_n_t = default_t_range(eps, spec.family.nu)
    return t_min, t_max, default_n_t if n_t is None else n_t


def _provisional_constants(spec, t_min, t_max, n_t, eps):
    provisional = ApproxParams(t_min, t_max, n_t, 1, 1, 1.0, eps / 10.0)
    return derived_constants(spec, provisional)


def _smallest_n_sigma(spec, consts, dim, budget):
    if consts.kappa == 1.0:
        return 1
    for n_sigma in range(1, MAX_N_SIGMA + 1):
        basis = cheb_nodes(spec.sigma_min, spec.sigma_max, n_sigma)
        term = lebesgue_estimate(basis) * consts.rho_max ** dim * eps_cheb(n_sigma, consts.kappa)
        if term <= budget:
            return n_sigma
    logger.warning(f"interpolation target not met with N_sigma={MAX_N_SIGMA}")
    return MAX_N_SIGMA


def _smallest_M(consts, n_sigma, sigma_min, grid, budget, max_grid_points):
    dim, delta_omega = grid.dim, grid.delta_omega
    prefactor = _fourier_prefactor(n_sigma, consts, sigma_min, dim)
    aliasing = np.exp(-(1.0 / (4.0 * consts.rho_max * delta_omega)) ** 2)
    allowance = budget / prefactor - aliasing
    if allowance <= 0:
        logger.warning(
            "the Fourier target is out of reach at this grid spacing; "
            "choosing M to balance truncation against aliasing"
        )
        allowance = aliasing

    scale = 2.0 * np.pi * consts.rho_min * delta_omega
    M = int(np.ceil(np.sqrt(max(np.log(consts.lam ** dim / allowance), 0.0)) / scale))
    M = max(M, 1)

    def truncation(m):
        return consts.lam ** dim * np.exp(-(scale * m) ** 2)

    while M > 1 and truncation(M - 1) <= allowance:
        M -= 1
    while truncation(M) > allowance:
        M += 1

    cap = int((max_grid_points ** (1.0 / dim) - 1) // 2)
    if M > cap:
        logger.warning(f"M={M} exceeds the grid-size cap; using M={cap}")
        M = max(cap, 1)
    return M


def select_params(eps: float, spec: KernelSpec, dim: int, max_grid_points: int | None = None) -> ApproxParams:
    """Pick t-range, N_sigma and (dw, M) so each stage contributes at most eps/3."""
    if not 0 < eps < 1:
        raise InvalidToleranceError(f"tolerance must lie in (0, 1), got {eps}")
    budget = eps / 3.0

    t_min, t_max, n_t = _t_range(spec, eps)
    consts = _provisional_constants(spec, t_min, t_max, n_t, eps)
    n_sigma = _smallest_n_sigma(spec, consts, dim, budget)
    grid = default_grid(eps, consts, 1, dim)
    grid = replace(grid, M=_smallest_M(
        consts, n_sigma, spec.sigma_min, grid, budget,
        settings.max_grid_points if max_grid_points is None else max_grid_points,
    ))

    params = ApproxParams(t_min, t_max, n_t, n_sigma, grid.M, grid.delta_omega, eps / 10.0)
    logger.info(f"selected parameters for eps={eps:g}: {params}")
    return params


def explicit_params(spec: KernelSpec, dim: int, n_t: int | None, n_sigma: int, M: int,
                    eps: float = 1e-6, delta_omega: float | None = None,
                    nufft_tol: float | None = None) -> ApproxParams:
    """Parameters given by hand, with the t-range and grid spacing filled in from eps."""
    if not 0 < eps < 1:
        raise InvalidToleranceError(f"tolerance must lie in (0, 1), got {eps}")
    t_min, t_max, n_t = _t_range(spec, eps, n_t)
    if delta_omega is None:
        delta_omega = default_grid(eps, _provisional_constants(spec, t_min, t_max, n_t, eps), M, dim).delta_omega
    return ApproxParams(
        t_min, t_max, n_t, n_sigma, M, delta_omega,
        eps / 10.0 if nufft_tol is None else nufft_tol,
    )


def max_entry_norm(matrix) -> float:
    return float(np.abs(np.asarray(matrix)).max())
