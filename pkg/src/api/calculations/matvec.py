"""
Fast kernel matvec K~ alpha in five steps:

    1. c_k = w_k(x) * alpha                     per Chebyshev node k
    2. b_k = type1(c_k)                         batched over k
    3. a_k' = sum_j v~_j G_k'j sum_k G_kj b_k   streaming, or A[k', k] b_k when coupled
    4. beta_k = type2(a_k)                      batched over k
    5. out = sum_k w_k(x) Re(beta_k)
"""

import hashlib
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator

from calculations import nufft
from calculations.chebyshev import ChebBasis, cheb_nodes, constant_basis, diag_weights
from calculations.fourier_grid import (
    CouplingTensor,
    FourierGrid,
    build_coupling,
    coupling_nbytes,
    scaled_quadrature_weights,
    symbol_values,
    symbol_widths,
)
from calculations.kernels import KernelSpec, PointSet
from calculations.quadrature import QuadratureScheme, build_scheme
from helpers.config import settings
from helpers.errors import InvalidSchemeError, ResourceError, ShapeError, UsageError

logger = logging.getLogger(__name__)

STRATEGIES = ("coupled", "streaming")
RECONSTRUCT_LIMIT = 2000


@dataclass(frozen=True)
class ApproxParams:
    t_min: float
    t_max: float
    n_t: int
    n_sigma: int
    M: int
    delta_omega: float
    nufft_tol: float

    def __post_init__(self):
        if self.t_min > self.t_max:
            raise InvalidSchemeError(f"t_min={self.t_min} exceeds t_max={self.t_max}")
        if self.n_t < 0:
            raise InvalidSchemeError(f"N_t must be non-negative, got {self.n_t}")
        if self.n_sigma < 1:
            raise UsageError(f"N_sigma must be at least 1, got {self.n_sigma}")
        if self.M < 1:
            raise UsageError(f"M must be at least 1, got {self.M}")
        if not self.delta_omega > 0:
            raise UsageError(f"grid spacing must be positive, got {self.delta_omega}")


@dataclass(frozen=True, eq=False)
class MatvecPlan:
    spec: KernelSpec
    pts: PointSet
    params: ApproxParams
    scheme: QuadratureScheme
    basis: ChebBasis
    grid: FourierGrid
    weights: np.ndarray
    strategy: str
    coupling: CouplingTensor | None
    nufft_plan: nufft.NufftPlan

    @property
    def n(self) -> int:
        return self.pts.n

    @property
    def n_basis(self) -> int:
        return self.weights.shape[0]

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.params).encode())
        h.update(self.strategy.encode())
        h.update(np.ascontiguousarray(self.pts.points).tobytes())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        h.update(np.ascontiguousarray(self.scheme.v_weights).tobytes())
        if self.coupling is not None:
            h.update(np.ascontiguousarray(self.coupling.values).tobytes())
        return h.hexdigest()


def _choose_strategy(params, n_basis, grid, requested, memory_cap):
    cap = settings.coupling_memory_cap if memory_cap is None else memory_cap
    fits = coupling_nbytes(n_basis, grid) <= cap

    if requested is not None:
        if requested not in STRATEGIES:
            raise UsageError(f"unknown strategy {requested!r}; choose from {STRATEGIES}")
        if requested == "coupled" and not fits:
            raise ResourceError(
                f"coupling tensor for {n_basis} nodes on {grid.size} grid points exceeds the "
                "memory cap; use the streaming strategy"
            )
        return requested

    if params.n_t + 1 >= n_basis / 2.0:
        if fits:
            return "coupled"
        logger.info("coupling tensor exceeds the memory cap, falling back to streaming")
    return "streaming"


def build(spec: KernelSpec, pts: PointSet, params: ApproxParams, strategy: str | None = None,
          memory_cap: int | None = None, workers: int | None = None) -> MatvecPlan:
    if spec.is_squared_exponential != (params.n_t == 0):
        raise InvalidSchemeError("N_t = 0 exactly when the kernel is squared exponential")

    scheme = build_scheme(spec.family, params.t_min, params.t_max, params.n_t, pts.dim)
    if spec.sigma_min == spec.sigma_max:
        basis = constant_basis(spec.sigma_min)
    else:
        basis = cheb_nodes(spec.sigma_min, spec.sigma_max, params.n_sigma)
    grid = FourierGrid(params.M, params.delta_omega, pts.dim)
    weights = diag_weights(spec, basis, pts)

    chosen = _choose_strategy(params, basis.n_sigma + 1, grid, strategy, memory_cap)
    coupling = build_coupling(scheme, basis, grid, memory_cap, workers) if chosen == "coupled" else None
    nufft_plan = nufft.plan(pts, grid, params.nufft_tol, workers=workers)

    logger.info(
        f"matvec plan: N={pts.n} d={pts.dim} N_t={params.n_t} N_sigma={basis.n_sigma} "
        f"M={params.M} dw={params.delta_omega:.4g} strategy={chosen}"
    )
    return MatvecPlan(spec, pts, params, scheme, basis, grid, weights, chosen, coupling, nufft_plan)


def couple(plan: MatvecPlan, b: np.ndarray) -> np.ndarray:
    """Step 3 on flattened grid coefficients b of shape (K, G)."""
    if plan.strategy == "coupled":
        tensor = plan.coupling.flat()
        real = np.einsum("abn,bn->an", tensor, b.real)
        imag = np.einsum("abn,bn->an", tensor, b.imag)
        return real + 1j * imag

    freq_sq = plan.grid.frequency_norm_sq().ravel()
    v_tilde = scaled_quadrature_weights(plan.scheme, plan.grid)
    rho = symbol_widths(plan.scheme, plan.basis)
    out = np.zeros_like(b)
    for j, weight in enumerate(v_tilde):
        if weight == 0.0:
            continue
        symbols = symbol_values(rho[j], freq_sq, plan.grid.dim)
        mixed = (symbols * b).sum(axis=0)
        out += weight * symbols * mixed[None, :]
    return out


def grid_response(plan: MatvecPlan, alpha: np.ndarray) -> np.ndarray:
    """Steps 1 to 3: the grid functions a_k, shape (K, *grid.shape)."""
    c = plan.weights * alpha[None, :]
    b = nufft.type1(plan.nufft_plan, c).reshape(plan.n_basis, -1)
    return couple(plan, b).reshape((plan.n_basis,) + plan.grid.shape)


def gather(nufft_plan: nufft.NufftPlan, weights: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Steps 4 and 5 against any point set sharing the grid; complex before real extraction."""
    beta = nufft.type2(nufft_plan, a)
    return (weights * beta).sum(axis=0)


def _check_vector(plan, alpha):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (plan.n,):
        raise ShapeError(f"vector has shape {alpha.shape}, expected ({plan.n},)")
    return alpha


def apply_complex(plan: MatvecPlan, alpha) -> np.ndarray:
    alpha = _check_vector(plan, alpha)
    if not alpha.any():
        return np.zeros(plan.n, dtype=complex)
    return gather(plan.nufft_plan, plan.weights, grid_response(plan, alpha))


def imaginary_residue(plan: MatvecPlan, alpha) -> float:
    return float(np.abs(apply_complex(plan, alpha).imag).max())


def residue_bound(plan: MatvecPlan, alpha) -> float:
    return 10.0 * plan.params.nufft_tol * float(np.linalg.norm(alpha))


def apply(plan: MatvecPlan, alpha) -> np.ndarray:
    out = apply_complex(plan, alpha)
    residue = float(np.abs(out.imag).max())
    bound = residue_bound(plan, alpha)
    if residue > bound:
        logger.warning(f"imaginary residue {residue:.3e} exceeds 10 * nufft_tol * |alpha| = {bound:.3e}")
    return out.real


def apply_regularized(plan: MatvecPlan, alpha, eta_sq: float) -> np.ndarray:
    if eta_sq < 0:
        raise UsageError(f"noise variance must be non-negative, got {eta_sq}")
    alpha = _check_vector(plan, alpha)
    return apply(plan, alpha) + eta_sq * alpha


def as_linear_operator(plan: MatvecPlan, eta_sq: float = 0.0) -> LinearOperator:
    return LinearOperator(
        (plan.n, plan.n),
        matvec=lambda v: apply_regularized(plan, np.ravel(v), eta_sq),
        rmatvec=lambda v: apply_regularized(plan, np.ravel(v), eta_sq),
        dtype=float,
    )


def reconstruct_matrix(plan: MatvecPlan) -> np.ndarray:
    """K~ column by column; only for small point sets."""
    if plan.n > RECONSTRUCT_LIMIT:
        raise ResourceError(f"refusing to reconstruct a {plan.n}x{plan.n} matrix")
    columns = np.empty((plan.n, plan.n))
    for i in range(plan.n):
        unit = np.zeros(plan.n)
        unit[i] = 1.0
        columns[:, i] = apply(plan, unit)
    return columns
