"""
Truncated Fourier lattice {n dw : n in [-M, M]^d}, Gaussian symbols and the
coupling tensor

    A[k', k, n] = sum_j (dw)^d v_j G(sigma_k' chi_j)[n] G(sigma_k chi_j)[n]

with G(rho)[n] = (sqrt(2 pi) rho)^d exp(-(2 pi rho)^2 |w_n|^2 / 2).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from calculations.chebyshev import ChebBasis
from calculations.kernels import DerivedConstants
from calculations.quadrature import QuadratureScheme
from helpers.config import settings
from helpers.errors import InvalidToleranceError, ResourceError, ShapeError

logger = logging.getLogger(__name__)

MAX_DELTA_OMEGA = 0.125
# grid points per coupling-build chunk
GRID_CHUNK = 1 << 15


@dataclass(frozen=True)
class FourierGrid:
    M: int
    delta_omega: float
    dim: int

    def __post_init__(self):
        if self.M < 1:
            raise ShapeError(f"grid half-width M must be positive, got {self.M}")
        if not self.delta_omega > 0:
            raise ShapeError(f"grid spacing must be positive, got {self.delta_omega}")
        if self.dim not in (1, 2, 3):
            raise ShapeError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.delta_omega > MAX_DELTA_OMEGA:
            logger.warning(
                f"grid spacing {self.delta_omega:.4g} exceeds 1/8; the Fourier error estimate no longer applies"
            )

    @property
    def n_modes(self) -> int:
        return 2 * self.M + 1

    @property
    def shape(self) -> tuple:
        return (self.n_modes,) * self.dim

    @property
    def size(self) -> int:
        return self.n_modes ** self.dim

    def indices(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def frequency_norm_sq(self) -> np.ndarray:
        """|w_n|^2 over the grid, shaped like the grid."""
        w2 = (self.indices() * self.delta_omega) ** 2
        total = np.zeros(self.shape)
        for axis in range(self.dim):
            view = [1] * self.dim
            view[axis] = self.n_modes
            total = total + w2.reshape(view)
        return total


def symbol_values(rho, freq_sq, dim: int) -> np.ndarray:
    """Gaussian symbols for every rho (any shape) against flattened |w|^2, shape rho.shape + freq_sq.shape."""
    rho = np.asarray(rho, dtype=float)[..., None]
    return (np.sqrt(2.0 * np.pi) * rho) ** dim * np.exp(-2.0 * np.pi ** 2 * rho ** 2 * freq_sq)


def gaussian_symbol(rho: float, grid: FourierGrid) -> np.ndarray:
    freq_sq = grid.frequency_norm_sq().ravel()
    return symbol_values(rho, freq_sq, grid.dim).reshape(grid.shape)


def scaled_quadrature_weights(scheme: QuadratureScheme, grid: FourierGrid) -> np.ndarray:
    return grid.delta_omega ** grid.dim * scheme.v_weights


def symbol_widths(scheme: QuadratureScheme, basis: ChebBasis) -> np.ndarray:
    """rho_jk = chi_j sigma_k, shape (N_t + 1, N_sigma + 1)."""
    return scheme.chi_nodes[:, None] * basis.nodes[None, :]


@dataclass(frozen=True)
class CouplingTensor:
    values: np.ndarray
    grid: FourierGrid

    @property
    def n_basis(self) -> int:
        return self.values.shape[0]

    def flat(self) -> np.ndarray:
        return self.values.reshape(self.n_basis, self.n_basis, -1)


def coupling_nbytes(n_basis: int, grid: FourierGrid) -> int:
    return n_basis * n_basis * grid.size * np.dtype(float).itemsize


def build_coupling(scheme: QuadratureScheme, basis: ChebBasis, grid: FourierGrid,
                   memory_cap: int | None = None, workers: int | None = None) -> CouplingTensor:
    n_basis = basis.n_sigma + 1
    cap = settings.coupling_memory_cap if memory_cap is None else memory_cap
    needed = coupling_nbytes(n_basis, grid)
    if needed > cap:
        raise ResourceError(
            f"coupling tensor needs {needed / 2 ** 30:.2f} GiB, above the cap of "
            f"{cap / 2 ** 30:.2f} GiB; use the streaming strategy"
        )

    freq_sq = grid.frequency_norm_sq().ravel()
    v_tilde = scaled_quadrature_weights(scheme, grid)
    rho = symbol_widths(scheme, basis)
    out = np.empty((n_basis, n_basis, grid.size))

    def fill(start):
        stop = min(start + GRID_CHUNK, grid.size)
        symbols = symbol_values(rho, freq_sq[start:stop], grid.dim)
        out[:, :, start:stop] = np.einsum("j,jan,jbn->abn", v_tilde, symbols, symbols)

    with ThreadPoolExecutor(max_workers=workers or settings.threads) as pool:
        list(pool.map(fill, range(0, grid.size, GRID_CHUNK)))

    # einsum association differs between (a, b) and (b, a)
    out = 0.5 * (out + out.transpose(1, 0, 2))
    logger.info(
        f"coupling tensor built: {n_basis}x{n_basis} over {grid.size} grid points "
        f"({needed / 2 ** 20:.1f} MiB)"
    )
    return CouplingTensor(out.reshape((n_basis, n_basis) + grid.shape), grid)


def eps_F(grid: FourierGrid, consts: DerivedConstants) -> float:
    truncation = consts.lam ** grid.dim * np.exp(-(2.0 * np.pi * consts.rho_min * grid.M * grid.delta_omega) ** 2)
    aliasing = np.exp(-(1.0 / (4.0 * consts.rho_max * grid.delta_omega)) ** 2)
    return float(truncation + aliasing)


def default_delta_omega(eps: float, rho_max: float) -> float:
    if not 0 < eps < 1:
        raise InvalidToleranceError(f"tolerance must lie in (0, 1), got {eps}")
    return float(min(MAX_DELTA_OMEGA, 0.25 / (rho_max * np.sqrt(np.log(1.0 / eps)))))


def default_grid(eps: float, consts: DerivedConstants, M: int, dim: int) -> FourierGrid:
    return FourierGrid(M, default_delta_omega(eps, consts.rho_max), dim)
