"""
Benchmark harness: seeded datasets, the reference length-scale field, run
configuration, and the matvec / ablation / solve / phi runs that emit
result rows. The same functions back the command line and the Celery tasks.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import cKDTree

from calculations import matvec
from calculations.calculations import app
from calculations.error_model import explicit_params, select_params
from calculations.gpr import Observations, cg_solve
from calculations.kernels import (
    ConstantField,
    KernelSpec,
    Matern,
    PointSet,
    SquaredExponential,
    dense_matvec,
    matern_phi,
)
from calculations.quadrature import build_scheme, default_t_range, reconstruct_phi
from helpers.config import settings
from helpers.csv_io import normalize_points, read_points
from helpers.errors import UsageError

logger = logging.getLogger(__name__)

SIGMA_REF_MIN = 1.0 / 6.0 - 0.01
SIGMA_REF_MAX = 1.0 / 2.0 + 0.01

# (N_t, N_sigma, M) by kernel and dimension
REFERENCE_PARAMS = {
    ("matern", 1): (20, 20, 400),
    ("matern", 2): (20, 20, 200),
    ("matern", 3): (20, 16, 50),
    ("sqexp", 1): (0, 26, 100),
    ("sqexp", 2): (0, 26, 140),
    ("sqexp", 3): (0, 16, 50),
}
SOLVE_N_SIGMA = 15
SOLVE_REGIME1_M = 75
SAMPLED_ROWS = 512

STREAM_POINTS, STREAM_VECTOR, STREAM_ROWS = 0, 1, 2

AXIS_FIELDS = {"N_t": "nt", "N_sigma": "nsigma", "M": "m", "N": "n"}


def rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator; one independent stream per purpose."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def sigma_ref(x) -> np.ndarray:
    """(prod_i cos(pi x_i) + 2) / 6 for each row of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return (np.prod(np.cos(np.pi * x), axis=1) + 2.0) / 6.0


class ScaledField:
    def __init__(self, base, factor: float):
        self.base = base
        self.factor = float(factor)

    def __call__(self, points):
        return self.factor * np.asarray(self.base(points), dtype=float)


class NearestNeighbourField:
    """Piecewise-constant field from scattered samples."""

    def __init__(self, points, values):
        self.tree = cKDTree(np.asarray(points, dtype=float))
        self.values = np.asarray(values, dtype=float)

    def __call__(self, points):
        _, index = self.tree.query(np.atleast_2d(points))
        return self.values[index]


def gen_dataset(dim: int, n: int, seed: int) -> PointSet:
    if n < 1:
        raise UsageError(f"dataset size must be positive, got {n}")
    x = 2.0 * rng(seed, STREAM_POINTS).random((n, dim)) - 1.0
    # random() can return exactly 0
    x = np.where(x <= -1.0, np.nextafter(-1.0, 0.0), x)
    return PointSet(x)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["matvec", "ablate", "solve", "validate", "phi"] = "matvec"
    dim: int = Field(default=1, ge=1, le=3)
    n: int = Field(default=1000, ge=1)
    kernel: Literal["matern", "sqexp"] = "matern"
    nu: float = Field(default=1.5, gt=0)
    field: Literal["sigma_ref", "constant", "csv"] = "sigma_ref"
    sigma_value: float | None = Field(default=None, gt=0)
    weight: float = 1.0
    data: str | None = None
    normalize: bool = False

    nt: int | None = Field(default=None, ge=0)
    nsigma: int | None = Field(default=None, ge=1)
    m: int | None = Field(default=None, ge=1)
    domega: float | None = Field(default=None, gt=0)
    auto_eps: float | None = Field(default=None, gt=0, lt=1)
    eps: float = Field(default=1e-6, gt=0, lt=1)
    nufft_tol: float | None = Field(default=None, gt=0, lt=1)
    strategy: Literal["coupled", "streaming"] | None = None

    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    regime: Literal[1, 2] | None = None
    cg_tol: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=1000, ge=1)
    axis: Literal["N_t", "N_sigma", "M", "N"] | None = None
    values: list[float] = Field(default_factory=list)
    radii: int = Field(default=50, ge=1)
    r_max: float = Field(default=5.0, ge=0)

    oracle_cap: int | None = Field(default=None, ge=1)
    threads: int | None = Field(default=None, ge=1)
    out: str | None = None

    @model_validator(mode="after")
    def _check_combinations(self):
        explicit = [name for name in ("nt", "nsigma", "m", "domega") if getattr(self, name) is not None]
        if self.auto_eps is not None and explicit:
            raise ValueError(
                f"explicit approximation parameters ({', '.join(explicit)}) and auto_eps are mutually exclusive"
            )
        if self.field == "constant" and self.sigma_value is None:
            raise ValueError("the constant field needs sigma_value")
        if self.field == "csv" and self.data is None:
            raise ValueError("the csv field reads sigma from the data file; pass data")
        if self.kernel == "sqexp" and self.nt not in (None, 0):
            raise ValueError("the squared-exponential kernel takes N_t = 0")
        if self.command == "ablate" and self.axis is None:
            raise ValueError("ablate needs an axis")
        return self


@dataclass
class Problem:
    spec: KernelSpec
    pts: PointSet
    y: np.ndarray | None = None


@dataclass
class ResultRow:
    command: str
    kernel: str
    nu: float | None
    field: str
    dim: int
    n: int
    n_t: int
    n_sigma: int
    m: int
    delta_omega: float
    nufft_tol: float
    strategy: str
    seed: int
    build_seconds: float | None = None
    apply_seconds: float | None = None
    solve_seconds: float | None = None
    total_seconds: float | None = None
    rel_error: float | None = None
    sampled_rel_error: float | None = None
    iterations: int | None = None
    final_residual: float | None = None
    converged: bool | None = None
    eta_sq: float | None = None
    regime: int | None = None
    axis: str | None = None
    value: float | None = None


@dataclass
class PhiRow:
    nu: float
    r: float
    t_min: float
    t_max: float
    n_t: int
    phi_reference: float
    phi_quadrature: float
    abs_error: float


@contextmanager
def runtime_overrides(cfg: RunConfig):
    """Apply the run's thread and oracle caps for the duration of one run."""
    saved = settings.threads, settings.oracle_cap
    if cfg.threads:
        settings.threads = cfg.threads
    if cfg.oracle_cap:
        settings.oracle_cap = cfg.oracle_cap
    try:
        yield
    finally:
        settings.threads, settings.oracle_cap = saved


def kernel_family(cfg: RunConfig):
    return SquaredExponential() if cfg.kernel == "sqexp" else Matern(cfg.nu)


def build_problem(cfg: RunConfig) -> Problem:
    y = sigma_samples = None
    scale = 1.0
    if cfg.data:
        points, y, sigma_samples = read_points(cfg.data, cfg.dim)
        if cfg.normalize:
            points, _, scale = normalize_points(points)
            logger.warning(
                f"points were mapped into the unit box with scale {scale:.6g}; "
                "the kernel is redefined in the transformed coordinates"
            )
        pts = PointSet(points)
    else:
        pts = gen_dataset(cfg.dim, cfg.n, cfg.seed)

    if cfg.field == "sigma_ref":
        sigma, low, high = sigma_ref, SIGMA_REF_MIN, SIGMA_REF_MAX
    elif cfg.field == "constant":
        value = cfg.sigma_value / scale
        sigma, low, high = ConstantField(value), value, value
    else:
        if sigma_samples is None:
            raise UsageError("the csv field needs a sigma column in the data file")
        values = sigma_samples / scale
        sigma, low, high = NearestNeighbourField(pts.points, values), float(values.min()), float(values.max())

    spec = KernelSpec(kernel_family(cfg), sigma, ConstantField(cfg.weight), low, high)
    return Problem(spec, pts, y)


def resolve_params(cfg: RunConfig, spec: KernelSpec, dim: int) -> matvec.ApproxParams:
    if cfg.auto_eps is not None:
        return select_params(cfg.auto_eps, spec, dim)
    ref_nt, ref_nsigma, ref_m = REFERENCE_PARAMS[(cfg.kernel, dim)]
    return explicit_params(
        spec, dim,
        n_t=ref_nt if cfg.nt is None else cfg.nt,
        n_sigma=ref_nsigma if cfg.nsigma is None else cfg.nsigma,
        M=ref_m if cfg.m is None else cfg.m,
        eps=cfg.eps,
        delta_omega=cfg.domega,
        nufft_tol=cfg.nufft_tol,
    )


def relative_error(approx, exact) -> float:
    scale = np.linalg.norm(exact)
    diff = np.linalg.norm(np.asarray(approx) - np.asarray(exact))
    return float(diff / scale) if scale > 0 else float(diff)


def _row(cfg, command, pts, params, plan) -> ResultRow:
    return ResultRow(
        command=command,
        kernel=cfg.kernel,
        nu=None if cfg.kernel == "sqexp" else cfg.nu,
        field=cfg.field,
        dim=pts.dim,
        n=pts.n,
        n_t=params.n_t,
        n_sigma=params.n_sigma,
        m=params.M,
        delta_omega=params.delta_omega,
        nufft_tol=params.nufft_tol,
        strategy=plan.strategy,
        seed=cfg.seed,
    )


def run_matvec_bench(cfg: RunConfig) -> list[ResultRow]:
    with runtime_overrides(cfg):
        return [_matvec_row(cfg)]


def _matvec_row(cfg: RunConfig) -> ResultRow:
    problem = build_problem(cfg)
    spec, pts = problem.spec, problem.pts
    params = resolve_params(cfg, spec, pts.dim)

    start = time.perf_counter()
    plan = matvec.build(spec, pts, params, strategy=cfg.strategy)
    build_seconds = time.perf_counter() - start

    alpha = rng(cfg.seed, STREAM_VECTOR).random(pts.n)
    start = time.perf_counter()
    out = matvec.apply(plan, alpha)
    apply_seconds = time.perf_counter() - start

    row = _row(cfg, "matvec", pts, params, plan)
    row.build_seconds = build_seconds
    row.apply_seconds = apply_seconds
    row.total_seconds = build_seconds + apply_seconds

    if pts.n <= settings.oracle_cap:
        row.rel_error = relative_error(out, dense_matvec(spec, pts, alpha))
    else:
        rows = np.sort(rng(cfg.seed, STREAM_ROWS).choice(pts.n, min(SAMPLED_ROWS, pts.n), replace=False))
        row.sampled_rel_error = relative_error(out[rows], dense_matvec(spec, pts, alpha, rows=rows))

    logger.info(
        f"matvec N={pts.n} d={pts.dim}: build {build_seconds:.3f}s apply {apply_seconds:.3f}s "
        f"error {row.rel_error if row.rel_error is not None else row.sampled_rel_error}"
    )
    return row


def pinned_config(cfg: RunConfig) -> RunConfig:
    """Replace auto_eps by the explicit parameters it selects."""
    if cfg.auto_eps is None:
        return cfg
    problem = build_problem(cfg.model_copy(update={"n": 1}) if not cfg.data else cfg)
    params = select_params(cfg.auto_eps, problem.spec, cfg.dim)
    return cfg.model_copy(update={
        "auto_eps": None,
        "eps": cfg.auto_eps,
        "nt": params.n_t,
        "nsigma": params.n_sigma,
        "m": params.M,
        "domega": params.delta_omega,
        "nufft_tol": params.nufft_tol,
    })


def ablation_config(cfg: RunConfig, axis: str, value) -> RunConfig:
    if axis not in AXIS_FIELDS:
        raise UsageError(f"unknown ablation axis {axis!r}; choose from {sorted(AXIS_FIELDS)}")
    if axis == "N_t" and cfg.kernel == "sqexp":
        raise UsageError("the squared-exponential kernel has no N_t axis")
    return pinned_config(cfg).model_copy(update={AXIS_FIELDS[axis]: int(value)})


def check_ablation_values(values):
    if not values:
        raise UsageError("an ablation needs at least one value")
    if list(values) != sorted(values):
        raise UsageError("ablation values must be sorted ascending")


def run_ablation(cfg: RunConfig, axis: str | None = None, values=None) -> list[ResultRow]:
    axis = axis or cfg.axis
    values = list(cfg.values if values is None else values)
    check_ablation_values(values)
    cfg = pinned_config(cfg)

    rows = []
    for value in values:
        for row in run_matvec_bench(ablation_config(cfg, axis, value)):
            rows.append(replace(row, command="ablate", axis=axis, value=float(value)))
    return rows


def solve_setup(cfg: RunConfig, problem: Problem):
    """Kernel, parameters and noise variance of a solve regime."""
    regime = cfg.regime or 1
    spec, pts = problem.spec, problem.pts
    n, dim = pts.n, pts.dim

    if regime == 1:
        eta_sq = n / 2e6
        default_m = SOLVE_REGIME1_M
    else:
        factor = (n / 10.0) ** (-1.0 / dim)
        weight = (n / 10.0) ** -0.5
        spec = KernelSpec(
            spec.family,
            ScaledField(spec.sigma, factor),
            ScaledField(spec.weight, weight),
            spec.sigma_min * factor,
            spec.sigma_max * factor,
        )
        eta_sq = 0.1
        default_m = int(np.ceil(3.0 * n ** (1.0 / dim) - 1e-9))

    params = explicit_params(
        spec, dim,
        n_t=(0 if cfg.kernel == "sqexp" else REFERENCE_PARAMS[("matern", dim)][0]) if cfg.nt is None else cfg.nt,
        n_sigma=SOLVE_N_SIGMA if cfg.nsigma is None else cfg.nsigma,
        M=default_m if cfg.m is None else cfg.m,
        eps=cfg.eps,
        delta_omega=cfg.domega,
        nufft_tol=cfg.nufft_tol,
    )
    return spec, params, eta_sq


def run_solve_bench(cfg: RunConfig) -> list[ResultRow]:
    if cfg.auto_eps is not None:
        raise UsageError("solve runs use the regime parameters; drop auto_eps")
    with runtime_overrides(cfg):
        return [_solve_row(cfg)]


def _solve_row(cfg: RunConfig) -> ResultRow:
    problem = build_problem(cfg)
    spec, params, eta_sq = solve_setup(cfg, problem)
    pts = problem.pts

    start = time.perf_counter()
    plan = matvec.build(spec, pts, params, strategy=cfg.strategy)
    build_seconds = time.perf_counter() - start

    y = problem.y if problem.y is not None else rng(cfg.seed, STREAM_VECTOR).random(pts.n)
    start = time.perf_counter()
    report = cg_solve(plan, Observations(y, eta_sq), tol=cfg.cg_tol, max_iter=cfg.max_iter)
    solve_seconds = time.perf_counter() - start

    row = _row(cfg, "solve", pts, params, plan)
    row.build_seconds = build_seconds
    row.solve_seconds = solve_seconds
    row.total_seconds = build_seconds + solve_seconds
    row.iterations = report.iterations
    row.final_residual = report.final_residual
    row.converged = report.converged
    row.eta_sq = eta_sq
    row.regime = cfg.regime or 1
    return row


def run_phi(cfg: RunConfig) -> list[PhiRow]:
    """Quadrature reconstruction of the Matern function against its reference values."""
    if cfg.kernel == "sqexp":
        raise UsageError("the phi table is defined for the Matern kernel")
    nu = cfg.nu
    t_min, t_max, n_t = default_t_range(cfg.eps, nu)
    n_t = n_t if cfg.nt is None else cfg.nt
    scheme = build_scheme(Matern(nu), t_min, t_max, n_t, 1)

    radii = np.linspace(0.0, cfg.r_max, cfg.radii)
    try:
        reference = matern_phi(nu, radii, "closed_form")
    except ValueError:
        reference = matern_phi(nu, radii, "bessel")
    approx = reconstruct_phi(scheme, nu, radii)

    return [
        PhiRow(nu, float(r), t_min, t_max, n_t, float(ref), float(val), float(abs(ref - val)))
        for r, ref, val in zip(radii, reference, approx)
    ]


@app.task(name="matvec_bench", bind=True)
def matvec_bench_task(self, config: dict, axis: str | None = None, value: float | None = None):
    cfg = RunConfig.model_validate(config)
    rows = run_matvec_bench(cfg)
    if axis is not None:
        rows = [replace(row, command="ablate", axis=axis, value=value) for row in rows]
    return [asdict(row) for row in rows]


@app.task(name="solve_bench", bind=True)
def solve_bench_task(self, config: dict):
    cfg = RunConfig.model_validate(config)
    return [asdict(row) for row in run_solve_bench(cfg)]
