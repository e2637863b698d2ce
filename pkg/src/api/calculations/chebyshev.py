"""
Chebyshev-Lobatto interpolation in the length-scale value sigma.

The Gaussian exp(-x^2 / (2 sigma^2)) is replaced by sum_k P_k(sigma) exp(-x^2 / (2 sigma_k^2)),
with P_k the Lagrange polynomials on the nodes, evaluated by the second
barycentric formula.
"""

import logging
from dataclasses import dataclass

import numpy as np

from calculations.kernels import KernelSpec, PointSet
from helpers.errors import DomainError, InvalidIntervalError

logger = logging.getLogger(__name__)

LEBESGUE_SAMPLES = 1000
# relative slack when checking sigma against the interval ends
RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class ChebBasis:
    nodes: np.ndarray
    barycentric_weights: np.ndarray
    sigma_min: float
    sigma_max: float

    @property
    def n_sigma(self) -> int:
        return len(self.nodes) - 1


def cheb_nodes(sigma_min: float, sigma_max: float, n_sigma: int) -> ChebBasis:
    """Nodes descending from sigma_max (k = 0) to sigma_min (k = n_sigma)."""
    if not sigma_min > 0:
        raise InvalidIntervalError(f"sigma_min must be positive, got {sigma_min}")
    if sigma_min >= sigma_max:
        raise InvalidIntervalError(f"need sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]")
    if n_sigma < 1:
        raise InvalidIntervalError(f"N_sigma must be at least 1, got {n_sigma}")

    k = np.arange(n_sigma + 1)
    nodes = (np.cos(np.pi * k / n_sigma) + 1.0) / 2.0 * (sigma_max - sigma_min) + sigma_min
    nodes[0], nodes[-1] = sigma_max, sigma_min

    weights = (-1.0) ** k
    weights[[0, -1]] *= 0.5
    return ChebBasis(nodes, weights, float(sigma_min), float(sigma_max))


def constant_basis(sigma: float) -> ChebBasis:
    """One-node basis with P_0 = 1, exact when sigma never varies."""
    return ChebBasis(np.array([float(sigma)]), np.ones(1), float(sigma), float(sigma))


def _check_range(basis, sigma):
    slack = RANGE_SLACK * basis.sigma_max
    bad = (sigma < basis.sigma_min - slack) | (sigma > basis.sigma_max + slack) | ~np.isfinite(sigma)
    if bad.any():
        index = int(np.flatnonzero(bad)[0])
        raise DomainError(
            f"sigma={sigma[index]!r} at index {index} lies outside "
            f"[{basis.sigma_min}, {basis.sigma_max}]"
        )


def basis_matrix(basis: ChebBasis, sigma) -> np.ndarray:
    """P_k(sigma_i) for all nodes k and all sigma_i, shape (N_sigma + 1, n)."""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    _check_range(basis, sigma)
    if basis.n_sigma == 0:
        return np.ones((1, sigma.size))

    diff = sigma[None, :] - basis.nodes[:, None]
    hits = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = basis.barycentric_weights[:, None] / diff
        values = terms / terms.sum(axis=0)

    hit_columns = hits.any(axis=0)
    if hit_columns.any():
        values[:, hit_columns] = hits[:, hit_columns].astype(float)
    return values


def basis_eval(basis: ChebBasis, sigma: float) -> np.ndarray:
    return basis_matrix(basis, [sigma])[:, 0]


def lebesgue_estimate(basis: ChebBasis, samples: int = LEBESGUE_SAMPLES) -> float:
    if basis.n_sigma == 0:
        return 1.0
    grid = np.linspace(basis.sigma_min, basis.sigma_max, samples)
    value = float(max(1.0, np.abs(basis_matrix(basis, grid)).sum(axis=0).max()))
    logger.debug(f"Lebesgue constant estimate {value:.4f} for N_sigma={basis.n_sigma}")
    return value


def diag_weights(spec: KernelSpec, basis: ChebBasis, pts: PointSet) -> np.ndarray:
    """w_k(x_i) = w(x_i) (2 pi sigma(x_i)^2)^(-d/2) P_k(sigma(x_i)), shape (N_sigma + 1, N)."""
    sigma = spec.sigma_at(pts.points)
    prefactor = spec.weight_at(pts.points) * (2.0 * np.pi * sigma ** 2) ** (-pts.dim / 2.0)
    return basis_matrix(basis, sigma) * prefactor[None, :]


def eps_cheb(n_sigma: int, kappa: float) -> float:
    if kappa < 1:
        raise InvalidIntervalError(f"kappa must be at least 1, got {kappa}")
    ratio = (kappa - 1.0) / (kappa + 1.0)
    return float(2.0 * (kappa - 1.0) * ratio ** n_sigma)
