"""
Non-stationary isotropic kernels and the dense kernel oracle.

    K(x, y) = w(x) w(y) (2 pi S)^(-d/2) phi(|x - y| / sqrt(S)),  S = sigma(x)^2 + sigma(y)^2

with phi a Matern function or the squared-exponential profile exp(-r^2 / 2).
The dense routines here are the reference every fast path is checked against.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln, kv

from helpers.config import settings
from helpers.errors import (
    DomainError,
    OracleSizeError,
    ShapeError,
    UnsupportedParameterError,
)

logger = logging.getLogger(__name__)

CLOSED_FORM_NUS = (0.5, 1.5, 2.5, 3.5)
ROW_BLOCK = 1024

ScalarField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PointSet:
    """N points of dimension 1, 2 or 3 inside the box [-1, 1]^d."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ShapeError(f"points must be an (N, d) array, got shape {pts.shape}")
        n, dim = pts.shape
        if n < 1:
            raise ShapeError("a point set needs at least one point")
        if dim not in (1, 2, 3):
            raise ShapeError(f"dimension must be 1, 2 or 3, got {dim}")
        if not np.all(np.isfinite(pts)):
            index = int(np.flatnonzero(~np.isfinite(pts).all(axis=1))[0])
            raise DomainError(f"point {index} has non-finite coordinates")
        outside = np.abs(pts) > 1.0
        if outside.any():
            index = int(np.flatnonzero(outside.any(axis=1))[0])
            raise DomainError(
                f"point {index} at {pts[index].tolist()} lies outside [-1, 1]^{dim}"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Matern:
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise UnsupportedParameterError(f"Matern smoothness must be positive, got {self.nu}")


@dataclass(frozen=True)
class SquaredExponential:
    pass


Family = Matern | SquaredExponential


class ConstantField:
    """Scalar field with the same value everywhere."""

    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, points):
        return np.full(np.asarray(points).shape[0], self.value)

    def __repr__(self):
        return f"ConstantField({self.value!r})"


@dataclass(frozen=True)
class KernelSpec:
    family: Family
    sigma: ScalarField
    weight: ScalarField
    sigma_min: float
    sigma_max: float

    def __post_init__(self):
        if not 0 < self.sigma_min <= self.sigma_max:
            raise DomainError(
                f"need 0 < sigma_min <= sigma_max, got [{self.sigma_min}, {self.sigma_max}]"
            )

    @classmethod
    def constant(cls, family, sigma, weight=1.0):
        return cls(family, ConstantField(sigma), ConstantField(weight), float(sigma), float(sigma))

    @property
    def is_squared_exponential(self) -> bool:
        return isinstance(self.family, SquaredExponential)

    @property
    def kappa(self) -> float:
        return self.sigma_max / self.sigma_min

    def sigma_at(self, points) -> np.ndarray:
        """Evaluate sigma, raising DomainError naming the first out-of-bounds index."""
        values = np.asarray(self.sigma(points), dtype=float).reshape(-1)
        bad = ~((values >= self.sigma_min) & (values <= self.sigma_max))
        if bad.any():
            index = int(np.flatnonzero(bad)[0])
            raise DomainError(
                f"sigma at point {index} is {values[index]!r}, outside the declared "
                f"bounds [{self.sigma_min}, {self.sigma_max}]"
            )
        return values

    def weight_at(self, points) -> np.ndarray:
        values = np.asarray(self.weight(points), dtype=float).reshape(-1)
        if np.any(np.abs(values) > 1.0):
            logger.warning(
                f"|w(x)| exceeds 1 at {int(np.sum(np.abs(values) > 1.0))} points; "
                "error estimates assume |w| <= 1"
            )
        return values


@dataclass(frozen=True)
class DerivedConstants:
    kappa: float
    chi_min: float
    chi_max: float
    rho_min: float
    rho_max: float
    lam: float


def _is_closed_form(nu) -> bool:
    return any(np.isclose(nu, c, rtol=0.0, atol=1e-12) for c in CLOSED_FORM_NUS)


def _closed_form(nu, r):
    if np.isclose(nu, 0.5):
        return np.exp(-r)
    if np.isclose(nu, 1.5):
        s = np.sqrt(3.0) * r
        return (1.0 + s) * np.exp(-s)
    if np.isclose(nu, 2.5):
        s = np.sqrt(5.0) * r
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    s = np.sqrt(7.0) * r
    return (1.0 + s + 2.0 * s * s / 5.0 + s ** 3 / 15.0) * np.exp(-s)


def _bessel_form(nu, r):
    s = np.sqrt(2.0 * nu) * r
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_scale = (1.0 - nu) * np.log(2.0) - gammaln(nu)
        values = np.exp(log_scale + nu * np.log(s)) * kv(nu, s)
    values = np.where(s == 0.0, 1.0, values)
    return np.nan_to_num(values, nan=0.0, posinf=0.0)


def _quadrature_form(nu, r):
    # local import: the quadrature module depends on the family types above
    from calculations.quadrature import build_scheme, default_t_range, reconstruct_phi

    t_min, t_max, _ = default_t_range(1e-15, nu)
    n_t = int(np.ceil((t_max - t_min) / 0.1))
    scheme = build_scheme(Matern(nu), t_min, t_max, n_t, 1)
    return reconstruct_phi(scheme, nu, r)


def matern_phi(nu: float, r, mode: str = "closed_form"):
    """
    Matern function phi_nu(r), normalised so phi_nu(0) = 1.

    Modes:
        closed_form       half-integer nu in {1/2, 3/2, 5/2, 7/2}
        bessel            2^(1-nu)/Gamma(nu) (sqrt(2 nu) r)^nu K_nu(sqrt(2 nu) r), any nu > 0
        quadrature_oracle fine trapezoid rule over the Gaussian-mixture presentation
    """
    if not nu > 0:
        raise UnsupportedParameterError(f"Matern smoothness must be positive, got {nu}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("radius must be non-negative")

    if mode == "closed_form":
        if not _is_closed_form(nu):
            raise UnsupportedParameterError(
                f"no closed form for nu={nu}; supported: {CLOSED_FORM_NUS}"
            )
        values = _closed_form(nu, r_arr)
    elif mode == "bessel":
        values = _bessel_form(nu, r_arr)
    elif mode == "quadrature_oracle":
        values = _quadrature_form(nu, r_arr)
    else:
        raise UnsupportedParameterError(f"unknown matern_phi mode {mode!r}")

    if np.ndim(r) == 0:
        return float(values)
    return values


def radial_profile(family: Family, r):
    if isinstance(family, SquaredExponential):
        return np.exp(-0.5 * np.asarray(r, dtype=float) ** 2)
    mode = "closed_form" if _is_closed_form(family.nu) else "quadrature_oracle"
    return matern_phi(family.nu, r, mode)


def kernel_block(spec: KernelSpec, x_pts, y_pts) -> np.ndarray:
    """Kernel values between two point sets as an |X| x |Y| matrix."""
    x = np.asarray(x_pts.points if isinstance(x_pts, PointSet) else x_pts, dtype=float)
    y = np.asarray(y_pts.points if isinstance(y_pts, PointSet) else y_pts, dtype=float)
    dim = x.shape[1]

    sx, sy = spec.sigma_at(x), spec.sigma_at(y)
    wx, wy = spec.weight_at(x), spec.weight_at(y)
    s2 = sx[:, None] ** 2 + sy[None, :] ** 2

    r = cdist(x, y) / np.sqrt(s2)
    return (wx[:, None] * wy[None, :]) * (2.0 * np.pi * s2) ** (-dim / 2.0) * radial_profile(spec.family, r)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.shape[0] != 1:
        raise ShapeError("kernel_eval takes two single points of equal dimension")
    PointSet(np.vstack([x, y]))
    return float(kernel_block(spec, x, y)[0, 0])


def check_oracle_cap(n, oracle_cap):
    cap = settings.oracle_cap if oracle_cap is None else oracle_cap
    if n > cap:
        raise OracleSizeError(
            f"dense oracle requested for N={n} points, above the cap of {cap}"
        )


def _row_blocks(n, block=ROW_BLOCK):
    return [(start, min(start + block, n)) for start in range(0, n, block)]


def dense_kernel_matrix(spec: KernelSpec, pts: PointSet, oracle_cap: int | None = None,
                        workers: int | None = None) -> np.ndarray:
    check_oracle_cap(pts.n, oracle_cap)
    x = pts.points
    matrix = np.empty((pts.n, pts.n))

    def fill(bounds):
        start, stop = bounds
        matrix[start:stop] = kernel_block(spec, x[start:stop], x)

    with ThreadPoolExecutor(max_workers=workers or settings.threads) as pool:
        list(pool.map(fill, _row_blocks(pts.n)))

    # mirror the upper triangle so both halves hold the same bits
    upper = np.triu(matrix)
    return upper + np.triu(matrix, 1).T


def cross_kernel_matvec(spec: KernelSpec, query, train, alpha, workers: int | None = None) -> np.ndarray:
    """sum_n alpha_n K(q, x_n) for every query point, in row blocks."""
    q = np.asarray(query.points if isinstance(query, PointSet) else query, dtype=float)
    x = np.asarray(train.points if isinstance(train, PointSet) else train, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (x.shape[0],):
        raise ShapeError(f"alpha has shape {alpha.shape}, expected ({x.shape[0]},)")

    out = np.empty(q.shape[0])

    def fill(bounds):
        start, stop = bounds
        out[start:stop] = kernel_block(spec, q[start:stop], x) @ alpha

    with ThreadPoolExecutor(max_workers=workers or settings.threads) as pool:
        list(pool.map(fill, _row_blocks(q.shape[0])))
    return out


def dense_matvec(spec: KernelSpec, pts: PointSet, alpha, rows=None, workers: int | None = None) -> np.ndarray:
    """(K alpha)[rows] without materialising K."""
    query = pts.points if rows is None else pts.points[np.asarray(rows)]
    return cross_kernel_matvec(spec, query, pts.points, alpha, workers=workers)


def derived_constants(spec: KernelSpec, params) -> DerivedConstants:
    if spec.is_squared_exponential:
        chi_min = chi_max = 1.0
    else:
        nu = spec.family.nu
        chi_min = nu ** -0.5 * np.exp(params.t_min / 2.0)
        chi_max = nu ** -0.5 * np.exp(params.t_max / 2.0)
    rho_min = spec.sigma_min * chi_min
    rho_max = spec.sigma_max * chi_max
    return DerivedConstants(
        kappa=spec.kappa,
        chi_min=float(chi_min),
        chi_max=float(chi_max),
        rho_min=float(rho_min),
        rho_max=float(rho_max),
        lam=float(rho_max / rho_min),
    )
