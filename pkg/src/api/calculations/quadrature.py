"""
Gaussian-mixture (Schoenberg) presentation of the Matern function and its
trapezoidal discretisation in the log-width variable t:

    phi_nu(r) = integral exp(-r^2 / (2 chi(t)^2)) u(t) dt
    chi(t) = nu^(-1/2) e^(t/2),   u(t) = e^(nu t - e^t) / Gamma(nu),   v(t) = chi(t)^(-d) u(t)
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from calculations.kernels import Family, Matern, SquaredExponential
from helpers.errors import InvalidSchemeError, InvalidToleranceError, UnsupportedParameterError

logger = logging.getLogger(__name__)


def chi_u_v(nu: float, t, dim: int):
    if not nu > 0:
        raise UnsupportedParameterError(f"Matern smoothness must be positive, got {nu}")
    t = np.asarray(t, dtype=float)
    chi = nu ** -0.5 * np.exp(t / 2.0)
    with np.errstate(over="ignore", under="ignore"):
        u = np.exp(nu * t - np.exp(t) - gammaln(nu))
    v = chi ** (-dim) * u
    if t.ndim == 0:
        return float(chi), float(u), float(v)
    return chi, u, v


@dataclass(frozen=True)
class QuadratureScheme:
    t_nodes: np.ndarray
    v_weights: np.ndarray
    delta_t: float
    chi_nodes: np.ndarray
    trap_weights: np.ndarray
    u_values: np.ndarray
    dim: int
    nu: float | None = None

    @property
    def n_t(self) -> int:
        return len(self.t_nodes) - 1

    @property
    def is_squared_exponential(self) -> bool:
        return self.nu is None


def build_scheme(family: Family, t_min: float, t_max: float, n_t: int, dim: int) -> QuadratureScheme:
    if isinstance(family, SquaredExponential):
        if n_t != 0:
            raise InvalidSchemeError(f"the squared-exponential scheme has N_t = 0, got {n_t}")
        one = np.ones(1)
        return QuadratureScheme(
            t_nodes=np.zeros(1),
            v_weights=one,
            delta_t=0.0,
            chi_nodes=one,
            trap_weights=one,
            u_values=one,
            dim=dim,
        )

    if n_t < 1:
        raise InvalidSchemeError("a Matern scheme needs N_t >= 1; N_t = 0 is the squared-exponential case")
    if t_min > t_max:
        raise InvalidSchemeError(f"t_min={t_min} exceeds t_max={t_max}")

    t_nodes = np.linspace(t_min, t_max, n_t + 1)
    delta_t = (t_max - t_min) / n_t
    trap = np.full(n_t + 1, delta_t)
    trap[[0, -1]] = delta_t / 2.0

    chi, u, v = chi_u_v(family.nu, t_nodes, dim)
    logger.debug(f"Matern scheme nu={family.nu}: t in [{t_min:.3f}, {t_max:.3f}], N_t={n_t}, delta_t={delta_t:.3f}")
    return QuadratureScheme(
        t_nodes=t_nodes,
        v_weights=v * trap,
        delta_t=float(delta_t),
        chi_nodes=chi,
        trap_weights=trap,
        u_values=u,
        dim=dim,
        nu=float(family.nu),
    )


def reconstruct_phi(scheme: QuadratureScheme, nu, r):
    """Trapezoid approximation of phi_nu(r) from the scheme's nodes."""
    if scheme.nu is not None and nu is not None and not np.isclose(scheme.nu, nu):
        raise InvalidSchemeError(f"scheme was built for nu={scheme.nu}, not {nu}")

    r = np.asarray(r, dtype=float)
    r2 = r * r
    mass = scheme.u_values * scheme.trap_weights
    total = np.zeros_like(r2)
    # one node at a time keeps memory at the size of r
    for chi, m in zip(scheme.chi_nodes, mass):
        if m == 0.0:
            continue
        total += m * np.exp(-r2 / (2.0 * chi * chi))

    if r.ndim == 0:
        return float(total)
    return total


def default_t_range(eps: float, nu: float):
    """t-range and node count with truncation below eps and spacing at most 1/2."""
    if not 0 < eps < 1:
        raise InvalidToleranceError(f"tolerance must lie in (0, 1), got {eps}")
    if not nu > 0:
        raise UnsupportedParameterError(f"Matern smoothness must be positive, got {nu}")
    log_eps = np.log(eps)
    t_min = (1.0 + log_eps) / nu
    t_max = np.log(-2.0 * log_eps)
    n_t = int(np.ceil(2.0 * (t_max - t_min)))
    return float(t_min), float(t_max), max(n_t, 1)


def matern_scheme(nu: float, eps: float, dim: int) -> QuadratureScheme:
    t_min, t_max, n_t = default_t_range(eps, nu)
    return build_scheme(Matern(nu), t_min, t_max, n_t, dim)
