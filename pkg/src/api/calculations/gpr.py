"""
Gaussian process regression on top of the fast matvec: a matrix-free
conjugate-gradient solve of (K~ + eta^2 I) alpha = y and the posterior mean
mu(q) = sum_n alpha_n K(q, x_n).

The posterior covariance K(x, y) - k(x)^T (K + eta^2 I)^-1 k(y) is not computed here.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from calculations import matvec, nufft
from calculations.chebyshev import diag_weights
from calculations.kernels import KernelSpec, PointSet, check_oracle_cap, cross_kernel_matvec
from helpers.errors import ShapeError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True)
class Observations:
    y: np.ndarray
    eta_sq: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ShapeError(f"observations must be a vector, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise UsageError("observations contain non-finite values")
        if self.eta_sq < 0:
            raise UsageError(f"noise variance must be non-negative, got {self.eta_sq}")
        object.__setattr__(self, "y", y)


@dataclass
class SolveReport:
    alpha: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)


class _ResidualTracker:
    """
    Follows the recursive residual y - A x_k from scipy's CG callbacks.

    Each CG iteration applies A once, to the search direction p, and then
    moves x along p. Keeping the last (p, A p) pair gives A x_k without an
    extra product.
    """

    def __init__(self, plan, eta_sq, y):
        self.base = matvec.as_linear_operator(plan, eta_sq)
        self.y = y
        self.y_norm = float(np.linalg.norm(y))
        self.last_in = self.last_out = None
        self.reset(np.zeros_like(y), np.zeros_like(y))

    def reset(self, x, ax):
        self.x = x.copy()
        self.ax = ax.copy()

    def system(self, v):
        v = np.ravel(v)
        out = self.base.matvec(v)
        self.last_in, self.last_out = v.copy(), out
        return out

    def operator(self):
        return LinearOperator(self.base.shape, matvec=self.system, rmatvec=self.system, dtype=float)

    def advance(self, x) -> float:
        p = self.last_in
        step = float((x - self.x) @ p / (p @ p)) if p is not None and p.any() else 0.0
        self.ax = self.ax + step * self.last_out
        self.x = x.copy()
        return float(np.linalg.norm(self.y - self.ax) / self.y_norm)


def cg_solve(plan: matvec.MatvecPlan, obs: Observations, tol: float = 1e-6,
             max_iter: int = DEFAULT_MAX_ITER,
             callback: Callable[[int, np.ndarray], None] | None = None) -> SolveReport:
    """
    Unpreconditioned CG from scipy with the relative 2-norm residual as stopping rule.

    When scipy reports convergence on its recursive residual but the true
    residual is still above tol, CG restarts from the current iterate.
    """
    if not obs.eta_sq > 0:
        raise UsageError("the solve needs a strictly positive noise variance")
    if obs.y.shape != (plan.n,):
        raise ShapeError(f"{obs.y.size} observations for {plan.n} points")

    y = obs.y
    y_norm = np.linalg.norm(y)
    if y_norm == 0.0:
        return SolveReport(np.zeros(plan.n), 0, 0.0, True, [0.0])

    tracker = _ResidualTracker(plan, obs.eta_sq, y)
    operator = tracker.operator()
    history = []
    iteration = 0

    def on_iteration(xk):
        nonlocal iteration
        iteration += 1
        history.append(tracker.advance(xk))
        if callback is not None:
            callback(iteration, np.array(xk, copy=True))
        if iteration % 50 == 0:
            logger.debug(f"CG iteration {iteration}: relative residual {history[-1]:.3e}")

    alpha = np.zeros(plan.n)
    true_residual = 1.0
    converged = False
    while True:
        alpha, info = cg(operator, y, x0=alpha, rtol=tol, atol=0.0,
                         maxiter=max_iter - iteration, callback=on_iteration)
        product = tracker.base.matvec(alpha)
        true_residual = float(np.linalg.norm(y - product) / y_norm)
        if true_residual <= tol:
            converged = True
            break
        if info != 0 or iteration >= max_iter:
            break
        logger.debug(f"recursive residual converged but true residual is {true_residual:.3e}; restarting")
        tracker.reset(alpha, product)

    if converged:
        logger.info(f"CG converged in {iteration} iterations, relative residual {true_residual:.3e}")
    else:
        logger.warning(f"CG stopped after {iteration} iterations at relative residual {true_residual:.3e}")

    return SolveReport(alpha, iteration, true_residual, converged, history)


def posterior_mean_dense(spec: KernelSpec, train: PointSet, alpha, query: PointSet,
                         oracle_cap: int | None = None) -> np.ndarray:
    check_oracle_cap(max(train.n, query.n), oracle_cap)
    return cross_kernel_matvec(spec, query, train, alpha)


def posterior_mean_fast(plan: matvec.MatvecPlan, alpha, query: PointSet) -> np.ndarray:
    """Training-side steps 1 to 3, then type 2 and the node weights at the query points."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (plan.n,):
        raise ShapeError(f"alpha has shape {alpha.shape}, expected ({plan.n},)")
    if query.dim != plan.pts.dim:
        raise ShapeError(f"query points are {query.dim}-dimensional, training points {plan.pts.dim}")

    query_weights = diag_weights(plan.spec, plan.basis, query)
    if not alpha.any():
        return np.zeros(query.n)

    query_plan = nufft.plan(query, plan.grid, plan.params.nufft_tol, workers=plan.nufft_plan.workers)
    response = matvec.grid_response(plan, alpha)
    return matvec.gather(query_plan, query_weights, response).real
