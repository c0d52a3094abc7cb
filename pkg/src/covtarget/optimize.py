"""Shared constrained maximizer used by every model fit.

Parameters live in an unconstrained space; a model-specific transform maps
them strictly inside the constraint set. Each start runs a derivative-free
simplex phase followed by a quasi-Newton polish driven by the package's own
central-difference gradients. Everything is deterministic given (data,
options, seed).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import CovTargetError, DataError, EstimationError

log = logging.getLogger(__name__)

# Finite stand-in for -inf objective values; large enough to lose every
# comparison, small enough not to overflow finite-difference arithmetic.
_BIG = 1e12

_BFGS_GTOL = 1e-6
_PERTURB_SCALE = 0.3


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 2000
    tol_obj: float = 1e-8
    tol_step: float = 1e-8
    n_starts: int = 5
    seed: int = 0
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.max_iters < 1:
            raise DataError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.n_starts < 1:
            raise DataError(f"n_starts must be >= 1, got {self.n_starts}")
        for name in ("tol_obj", "tol_step", "fd_step"):
            v = getattr(self, name)
            if not (v > 0.0 and np.isfinite(v)):
                raise DataError(f"{name} must be a positive float, got {v}")


@dataclass(frozen=True)
class StartOutcome:
    objective: float
    converged: bool


@dataclass(frozen=True)
class FitReport:
    """Outcome of a multi-start maximization.

    objective is the best value found; start_winner indexes per_start;
    iterations counts optimizer iterations in the winning start.
    """

    objective: float
    grad_norm: float
    iterations: int
    start_winner: int
    converged: bool
    per_start: tuple[StartOutcome, ...]


class IdentityTransform:
    """No-op transform for already-unconstrained problems."""

    def forward(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)


def simplex_map(u: np.ndarray) -> np.ndarray:
    """Map R^k onto the open simplex {w > 0, sum(w) < 1} via logistic
    weights w_i = exp(u_i) / (1 + sum_j exp(u_j)), computed stably."""
    u = np.asarray(u, dtype=float)
    m = max(0.0, float(u.max(initial=0.0)))
    e = np.exp(u - m)
    return e / (np.exp(-m) + e.sum())


def simplex_unmap(w: np.ndarray) -> np.ndarray:
    """Inverse of simplex_map; requires w strictly inside the simplex."""
    w = np.asarray(w, dtype=float)
    rest = 1.0 - float(w.sum())
    if np.any(w <= 0.0) or rest <= 0.0:
        raise DataError(
            f"point {w} is not strictly inside the open simplex"
        )
    return np.log(w / rest)


def fd_gradient(objective, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient with a per-coordinate relative step.

    Raises EstimationError naming the coordinate if a probe is non-finite.
    """
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        fp = float(objective(xp))
        fm = float(objective(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EstimationError(
                f"non-finite objective probe at coordinate {i}"
            )
        g[i] = (fp - fm) / (2.0 * h)
    return g


def _make_starts(
    x0, transform, n_starts: int, seed: int
) -> list[np.ndarray]:
    """Normalize x0 (one vector or a sequence of vectors, constrained space)
    to exactly n_starts unconstrained start points; extras are seeded
    perturbations of the provided starts."""
    arr = np.asarray(x0, dtype=float)
    if arr.ndim == 1:
        given = [arr]
    elif arr.ndim == 2:
        given = [arr[i] for i in range(arr.shape[0])]
    else:
        raise DataError(f"x0 must be a vector or a matrix of rows, got ndim={arr.ndim}")
    base = [np.asarray(transform.inverse(x), dtype=float) for x in given]
    starts = list(base[:n_starts])
    rng = np.random.default_rng(seed)
    k = 0
    while len(starts) < n_starts:
        u = base[k % len(base)]
        starts.append(u + _PERTURB_SCALE * rng.standard_normal(u.size))
        k += 1
    return starts


def maximize(
    objective,
    transform,
    x0,
    opts: OptimizerOptions | None = None,
) -> tuple[np.ndarray, FitReport]:
    """Maximize ``objective(transform.forward(u))`` over unconstrained u.

    x0 is one point (or several) in the *constrained* space. Returns the best
    constrained point and a FitReport. Ties between starts break toward the
    lowest start index. Raises EstimationError if no start produces a finite
    objective.
    """
    opts = opts or OptimizerOptions()
    starts = _make_starts(x0, transform, opts.n_starts, opts.seed)
    dim = starts[0].size

    def g(u: np.ndarray) -> float:
        try:
            val = float(objective(transform.forward(u)))
        except CovTargetError:
            return -np.inf
        return val if np.isfinite(val) else -np.inf

    def neg(u: np.ndarray) -> float:
        v = g(u)
        return -v if np.isfinite(v) else _BIG

    def neg_jac(u: np.ndarray) -> np.ndarray:
        return -fd_gradient(g, u, step=opts.fd_step)

    nm_maxiter = min(opts.max_iters, 200 * dim)
    results: list[tuple[float, bool, int, np.ndarray]] = []
    for s, u_s in enumerate(starts):
        if not np.isfinite(g(u_s)):
            log.debug("start %d: objective not finite at start point", s)
            results.append((-np.inf, False, 0, u_s))
            continue
        r1 = minimize(
            neg,
            u_s,
            method="Nelder-Mead",
            options=dict(
                maxiter=nm_maxiter,
                xatol=opts.tol_step,
                fatol=opts.tol_obj,
            ),
        )
        best_x, best_fun = r1.x, float(r1.fun)
        converged = bool(r1.success)
        iters = int(r1.nit)
        try:
            r2 = minimize(
                neg,
                r1.x,
                method="BFGS",
                jac=neg_jac,
                options=dict(maxiter=opts.max_iters, gtol=_BFGS_GTOL),
            )
        except EstimationError:
            r2 = None  # gradient probe left the feasible region; keep phase 1
        if r2 is not None:
            iters += int(r2.nit)
            if float(r2.fun) < best_fun:
                best_x, best_fun = r2.x, float(r2.fun)
            converged = converged or bool(r2.success)
        obj = -best_fun if best_fun < _BIG else -np.inf
        results.append((obj, converged and np.isfinite(obj), iters, best_x))
        log.debug("start %d: objective %.8g (converged=%s)", s, obj, converged)

    winner = 0
    for s in range(1, len(results)):
        if results[s][0] > results[winner][0]:
            winner = s
    best_obj, best_conv, best_iters, best_u = results[winner]
    if not np.isfinite(best_obj):
        raise EstimationError(
            "objective is not finite at any start "
            f"(tried {len(results)} starts)"
        )
    try:
        grad_norm = float(np.linalg.norm(fd_gradient(g, best_u, opts.fd_step)))
    except EstimationError:
        grad_norm = float("inf")
    report = FitReport(
        objective=float(best_obj),
        grad_norm=grad_norm,
        iterations=int(best_iters),
        start_winner=int(winner),
        converged=bool(best_conv),
        per_start=tuple(
            StartOutcome(objective=float(o), converged=bool(c))
            for o, c, _, _ in results
        ),
    )
    return transform.forward(best_u), report
