"""
Type 1 and type 2 non-uniform FFTs on the rescaled grid

    type 1:  a[n] = sum_j c_j exp(-2 pi i (n dw) . x_j)
    type 2:  f_j  = sum_n a[n] exp(+2 pi i (n dw) . x_j)

computed by spreading onto a 2x oversampled periodic grid with an
exponential-of-semicircle kernel, an FFT, and deconvolution by the kernel's
Fourier transform. The two transforms share spreading weights and are exact
discrete adjoints of each other.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.fft
from numpy.polynomial.legendre import leggauss

from calculations.fourier_grid import FourierGrid
from calculations.kernels import PointSet
from helpers.config import settings
from helpers.errors import InvalidToleranceError, ShapeError

logger = logging.getLogger(__name__)

MIN_TOL = 1e-14
OVERSAMPLE = 2.0
BETA_PER_WIDTH = 2.30
MIN_WIDTH, MAX_WIDTH = 2, 16
# spreading entries handled per pass when weights are not cached
CHUNK_ENTRIES = 1 << 22
# upper bound on fine-grid memory held by concurrent transforms
FINE_GRID_BUDGET = 1 << 30


def spread_width(tol: float) -> int:
    if not MIN_TOL <= tol < 1:
        raise InvalidToleranceError(
            f"NUFFT tolerance {tol} is not achievable; it must lie in [{MIN_TOL}, 1)"
        )
    # the small shift keeps exact powers of ten on the intended integer
    width = int(np.ceil(-np.log10(tol) - 1e-9)) + 1
    return int(np.clip(width, MIN_WIDTH, MAX_WIDTH))


def fine_grid_size(n_modes: int, width: int) -> int:
    n = max(int(np.ceil(OVERSAMPLE * n_modes)), 2 * width)
    while True:
        n = scipy.fft.next_fast_len(n)
        if n % 2 == 0:
            return n
        n += 1


def es_kernel(z, beta):
    """exp(beta (sqrt(1 - z^2) - 1)) on |z| <= 1, zero outside."""
    inside = np.abs(z) <= 1.0
    root = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.where(inside, np.exp(beta * (root - 1.0)), 0.0)


def kernel_transform(k, width: int, beta: float, nf: int) -> np.ndarray:
    """Fourier transform of the spreading kernel at integer frequencies k, in fine-grid units."""
    nodes, quad_weights = leggauss(4 * width + 40)
    half = width / 2.0
    values = quad_weights * es_kernel(nodes, beta)
    phase = 2.0 * np.pi * np.outer(np.asarray(k, dtype=float), nodes) * half / nf
    return half * (np.cos(phase) * values[None, :]).sum(axis=1)


@dataclass(frozen=True, eq=False)
class NufftPlan:
    pts: PointSet
    grid: FourierGrid
    tol: float
    spread_width: int
    oversample: float
    shape_param: float
    fine_size: int
    correction: np.ndarray
    mode_index: np.ndarray
    scaled: np.ndarray
    cache: tuple | None
    workers: int

    @property
    def n(self) -> int:
        return self.pts.n

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def fine_shape(self) -> tuple:
        return (self.fine_size,) * self.dim

    def _axis_weights(self, s):
        w = self.spread_width
        first = np.ceil(s - w / 2.0).astype(np.int64)
        offsets = first[:, None] + np.arange(w)[None, :]
        z = (s[:, None] - offsets) / (w / 2.0)
        return np.mod(offsets, self.fine_size), es_kernel(z, self.shape_param)

    def spreading_entries(self, start: int, stop: int):
        """Flat fine-grid indices and kernel weights for points start..stop, each (n, w^d)."""
        if self.cache is not None:
            idx, wts = self.cache
            return idx[start:stop], wts[start:stop]

        count = stop - start
        idx = np.zeros((count, 1), dtype=np.int64)
        wts = np.ones((count, 1))
        for axis in range(self.dim):
            axis_idx, axis_wts = self._axis_weights(self.scaled[start:stop, axis])
            idx = (idx[:, :, None] * self.fine_size + axis_idx[:, None, :]).reshape(count, -1)
            wts = (wts[:, :, None] * axis_wts[:, None, :]).reshape(count, -1)
        return idx, wts

    def chunks(self):
        if self.cache is not None:
            yield 0, self.n
            return
        step = max(1, CHUNK_ENTRIES // self.spread_width ** self.dim)
        for start in range(0, self.n, step):
            yield start, min(start + step, self.n)

    def pool_size(self, batch: int) -> int:
        fine_bytes = 16 * self.fine_size ** self.dim
        return max(1, min(self.workers, batch, FINE_GRID_BUDGET // fine_bytes))


def plan(pts: PointSet, grid: FourierGrid, tol: float, workers: int | None = None,
         cache_entries: int | None = None) -> NufftPlan:
    if pts.dim != grid.dim:
        raise ShapeError(f"points are {pts.dim}-dimensional but the grid is {grid.dim}-dimensional")

    width = spread_width(tol)
    beta = BETA_PER_WIDTH * width
    nf = fine_grid_size(grid.n_modes, width)

    # exp(-2 pi i n dw x) is periodic in dw x with period one, so wrapping is exact
    scaled = np.mod(nf * grid.delta_omega * pts.points, nf)

    axis_correction = 1.0 / kernel_transform(grid.indices(), width, beta, nf)
    correction = np.ones(())
    for _ in range(grid.dim):
        correction = np.multiply.outer(correction, axis_correction)

    nufft_plan = NufftPlan(
        pts=pts,
        grid=grid,
        tol=float(tol),
        spread_width=width,
        oversample=OVERSAMPLE,
        shape_param=beta,
        fine_size=nf,
        correction=correction,
        mode_index=np.mod(grid.indices(), nf),
        scaled=scaled,
        cache=None,
        workers=workers or settings.threads,
    )

    limit = settings.spread_cache_entries if cache_entries is None else cache_entries
    if pts.n * width ** grid.dim <= limit:
        object.__setattr__(nufft_plan, "cache", nufft_plan.spreading_entries(0, pts.n))

    logger.debug(
        f"NUFFT plan: N={pts.n} d={grid.dim} M={grid.M} width={width} beta={beta:.2f} "
        f"fine={nf} cached={nufft_plan.cache is not None}"
    )
    return nufft_plan


def _modes(plan_: NufftPlan):
    return np.ix_(*([plan_.mode_index] * plan_.dim))


def _type1_one(plan_: NufftPlan, c: np.ndarray, fft_workers: int) -> np.ndarray:
    total = plan_.fine_size ** plan_.dim
    fine = np.zeros(total, dtype=complex)
    for start, stop in plan_.chunks():
        idx, wts = plan_.spreading_entries(start, stop)
        flat = idx.ravel()
        fine += np.bincount(flat, weights=(wts * c[start:stop].real[:, None]).ravel(), minlength=total)
        if np.iscomplexobj(c):
            fine += 1j * np.bincount(flat, weights=(wts * c[start:stop].imag[:, None]).ravel(), minlength=total)

    spectrum = scipy.fft.fftn(fine.reshape(plan_.fine_shape), workers=fft_workers)
    return spectrum[_modes(plan_)] * plan_.correction


def _type2_one(plan_: NufftPlan, a: np.ndarray, fft_workers: int) -> np.ndarray:
    fine = np.zeros(plan_.fine_shape, dtype=complex)
    fine[_modes(plan_)] = a * plan_.correction
    values = scipy.fft.ifftn(fine, norm="forward", workers=fft_workers).ravel()

    out = np.empty(plan_.n, dtype=complex)
    for start, stop in plan_.chunks():
        idx, wts = plan_.spreading_entries(start, stop)
        out[start:stop] = (values[idx] * wts).sum(axis=1)
    return out


def _batched(plan_: NufftPlan, rows, single):
    if len(rows) == 1:
        return [single(plan_, rows[0], plan_.workers)]
    with ThreadPoolExecutor(max_workers=plan_.pool_size(len(rows))) as pool:
        return list(pool.map(lambda row: single(plan_, row, 1), rows))


def type1(plan_: NufftPlan, c) -> np.ndarray:
    """Scattered values to grid coefficients; c has shape (N,) or (B, N)."""
    c = np.asarray(c)
    if c.shape[-1:] != (plan_.n,) or c.ndim > 2:
        raise ShapeError(f"type 1 input has shape {c.shape}, expected ({plan_.n},) or (B, {plan_.n})")
    if c.ndim == 1:
        return _batched(plan_, [c], _type1_one)[0]
    return np.stack(_batched(plan_, list(c), _type1_one))


def type2(plan_: NufftPlan, a) -> np.ndarray:
    """Grid coefficients to values at the points; a has the grid shape, optionally batched."""
    a = np.asarray(a)
    shape = plan_.grid.shape
    if a.shape == shape:
        return _batched(plan_, [a], _type2_one)[0]
    if a.ndim == len(shape) + 1 and a.shape[1:] == shape:
        return np.stack(_batched(plan_, list(a), _type2_one))
    raise ShapeError(f"type 2 input has shape {a.shape}, expected {shape} or (B, *{shape})")


def _phases(pts: PointSet, grid: FourierGrid) -> np.ndarray:
    freqs = np.stack(np.meshgrid(*([grid.indices()] * grid.dim), indexing="ij"), axis=-1)
    freqs = freqs.reshape(-1, grid.dim) * grid.delta_omega
    return 2.0 * np.pi * pts.points @ freqs.T


def direct_type1(pts: PointSet, grid: FourierGrid, c) -> np.ndarray:
    """Direct O(N M^d) evaluation of the type 1 sum."""
    c = np.asarray(c)
    return (c @ np.exp(-1j * _phases(pts, grid))).reshape(grid.shape)


def direct_type2(pts: PointSet, grid: FourierGrid, a) -> np.ndarray:
    return np.exp(1j * _phases(pts, grid)) @ np.asarray(a).ravel()
