"""Two-stage DCC(1,1) correlation model.

Stage one fits a univariate GARCH(1,1) per series and standardizes the
residuals; stage two drives the quasi-correlation recursion

    Q_t = (1 - t1 - t2) Q_bar + t1 z_{t-1} z_{t-1}' + t2 Q_{t-1}

and rescales R_t = diag(Q_t)^{-1/2} Q_t diag(Q_t)^{-1/2}, which has a unit
diagonal by construction. Each Q entry is again a scalar one-pole filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ReturnPanel, correlation_from_series, synth_dates
from .errors import (
    CovTargetError,
    DataError,
    EstimationError,
    NumericalOverflowError,
    ShapeError,
)
from .garch import Garch11Params, _one_pole, garch11_filter, garch11_fit
from .linalg import kl_path_sum, stacked_quad_logdet, symmetrize
from .optimize import (
    FitReport,
    OptimizerOptions,
    maximize,
    simplex_map,
    simplex_unmap,
)
from .targeting import TargetSpec

_PSD_TOL = 1e-10


@dataclass(frozen=True)
class DccParams:
    """DCC parameters: per-series GARCH(1,1), correlation dynamics
    (theta1, theta2) with theta1 + theta2 < 1, and the intercept matrix
    q_bar (symmetric PSD with unit diagonal)."""

    univariate: tuple[Garch11Params, ...]
    theta1: float
    theta2: float
    q_bar: np.ndarray

    def __post_init__(self):
        if len(self.univariate) == 0:
            raise DataError("univariate parameter list is empty")
        if not (np.isfinite(self.theta1) and np.isfinite(self.theta2)):
            raise DataError("non-finite theta parameters")
        if self.theta1 < 0.0 or self.theta2 < 0.0:
            raise DataError(
                f"theta1 and theta2 must be nonnegative, got "
                f"{self.theta1}, {self.theta2}"
            )
        if not self.theta1 + self.theta2 < 1.0:
            raise DataError(
                f"theta1 + theta2 must be < 1, got {self.theta1 + self.theta2}"
            )
        q = symmetrize(self.q_bar)
        n = len(self.univariate)
        if q.shape != (n, n):
            raise ShapeError(
                f"q_bar must be ({n}, {n}) to match {n} univariate fits, "
                f"got {q.shape}"
            )
        if np.abs(np.diag(q) - 1.0).max() > 1e-12:
            raise DataError("q_bar must have a unit diagonal")
        w = np.linalg.eigvalsh(q)
        if float(w.min()) < -_PSD_TOL:
            raise DataError(
                f"q_bar is not positive semidefinite (min eigenvalue {w.min():.3e})"
            )
        q.setflags(write=False)
        object.__setattr__(self, "q_bar", q)
        object.__setattr__(self, "univariate", tuple(self.univariate))

    @property
    def n(self) -> int:
        return len(self.univariate)


@dataclass(frozen=True)
class CorrPath:
    """Conditional correlation path r (T, N, N) and the underlying
    quasi-correlations q; every r slice has a unit diagonal. Read-only."""

    r: np.ndarray
    q: np.ndarray

    @property
    def t_len(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True)
class Stage1Result:
    """Per-series GARCH fits, standardized residuals, and their sample
    correlation (the stage-two intercept matrix)."""

    params: tuple[Garch11Params, ...]
    std_resid: np.ndarray  # (T, N)
    q_bar: np.ndarray
    reports: tuple[FitReport, ...]


def dcc_stage1(panel: ReturnPanel, opts: OptimizerOptions | None = None) -> Stage1Result:
    """Fit GARCH(1,1) to each demeaned series and standardize residuals."""
    eps = panel.demeaned()
    fits: list[Garch11Params] = []
    reports: list[FitReport] = []
    z = np.empty_like(eps)
    for j, label in enumerate(panel.labels):
        try:
            p, rep = garch11_fit(eps[:, j], opts=opts)
        except CovTargetError as exc:
            raise EstimationError(
                f"stage-one GARCH fit failed for {label}: {exc}"
            ) from exc
        path = garch11_filter(eps[:, j], p, h1=float(eps[:, j].var(ddof=1)))
        z[:, j] = path.z
        fits.append(p)
        reports.append(rep)
    q_bar = correlation_from_series(z)
    return Stage1Result(
        params=tuple(fits), std_resid=z, q_bar=q_bar, reports=tuple(reports)
    )


def dcc_filter(z: np.ndarray, params: DccParams, q1: np.ndarray | None = None) -> CorrPath:
    """Run the quasi-correlation recursion over standardized residuals z,
    starting from Q_1 = q1 (default: q_bar), and rescale to correlations."""
    z = np.asarray(z, dtype=float)
    n = params.n
    if z.ndim != 2 or z.shape[1] != n:
        raise ShapeError(f"z must be (T, {n}), got {z.shape}")
    if z.shape[0] < 1:
        raise DataError("z has no rows")
    if not np.all(np.isfinite(z)):
        raise DataError("z contains non-finite values")
    q1 = params.q_bar if q1 is None else symmetrize(q1)
    if q1.shape != (n, n):
        raise ShapeError(f"q1 must be ({n}, {n}), got {q1.shape}")
    t_len = z.shape[0]
    t1, t2 = params.theta1, params.theta2
    q = np.empty((t_len, n, n))
    q[0] = q1
    if t_len > 1:
        intercept = (1.0 - t1 - t2) * params.q_bar
        outer = z[:-1, :, None] * z[:-1, None, :]
        x = intercept + t1 * outer
        for i in range(n):
            for j in range(i + 1):
                path = _one_pole(x[:, i, j], t2, float(q1[i, j]))
                q[1:, i, j] = path
                if j != i:
                    q[1:, j, i] = path
    if not np.all(np.isfinite(q)):
        t = int(np.argwhere(~np.isfinite(q))[0][0])
        raise NumericalOverflowError(
            f"quasi-correlation recursion overflowed at t={t}", t=t
        )
    d = np.sqrt(np.diagonal(q, axis1=1, axis2=2))
    if np.any(~(d > 0.0)):
        t = int(np.argwhere(~(d > 0.0))[0][0])
        raise NumericalOverflowError(
            f"quasi-correlation lost a positive diagonal at t={t}", t=t
        )
    r = q / (d[:, :, None] * d[:, None, :])
    ii = np.arange(n)
    r[:, ii, ii] = 1.0  # exact unit diagonal, not just up to rounding
    return CorrPath(r=r, q=q)


def dcc_stage2_loglik(z: np.ndarray, params: DccParams) -> float:
    """Correlation-stage quasi-likelihood
    -(1/2) sum_t (log|R_t| + z_t' R_t^{-1} z_t)."""
    z = np.asarray(z, dtype=float)
    path = dcc_filter(z, params)
    ld, qd = stacked_quad_logdet(path.r, z)
    return -0.5 * (ld + qd)


def dcc_modified_loglik(
    z: np.ndarray, params: DccParams, target: TargetSpec
) -> float:
    """Stage-two quasi-likelihood minus the targeting penalty
    sum_t KL(z_hat_pd, R_t); the correlation-scale target is used because
    R_t is a correlation matrix."""
    z = np.asarray(z, dtype=float)
    path = dcc_filter(z, params)
    ld, qd = stacked_quad_logdet(path.r, z)
    return -0.5 * (ld + qd) - kl_path_sum(target.z_hat_pd, path.r)


class _ThetaTransform:
    """(u1, u2) -> (theta1, theta2) strictly inside the open simplex."""

    def forward(self, u: np.ndarray) -> np.ndarray:
        return simplex_map(np.asarray(u, dtype=float))

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return simplex_unmap(np.asarray(x, dtype=float))


def dcc_fit(
    panel: ReturnPanel,
    target: TargetSpec | None = None,
    opts: OptimizerOptions | None = None,
    stage1: Stage1Result | None = None,
) -> tuple[DccParams, FitReport]:
    """Two-stage DCC fit.

    Stage one is fit per series (or supplied via ``stage1`` to reuse across
    penalized/unpenalized variants); stage two maximizes the correlation
    quasi-likelihood, penalized by the correlation-target KL when ``target``
    is given. The returned FitReport describes stage two.
    """
    if stage1 is None:
        stage1 = dcc_stage1(panel, opts=opts)
    z = stage1.std_resid
    q_bar = stage1.q_bar

    def objective(x: np.ndarray) -> float:
        p = DccParams(
            univariate=stage1.params,
            theta1=float(x[0]),
            theta2=float(x[1]),
            q_bar=q_bar,
        )
        if target is None:
            return dcc_stage2_loglik(z, p)
        return dcc_modified_loglik(z, p, target)

    x0 = np.array([0.05, 0.90])
    x, report = maximize(objective, _ThetaTransform(), x0, opts)
    params = DccParams(
        univariate=stage1.params,
        theta1=float(x[0]),
        theta2=float(x[1]),
        q_bar=q_bar,
    )
    return params, report


def dcc_std_residuals(panel: ReturnPanel, params: DccParams) -> np.ndarray:
    """Recompute standardized residuals for a panel under fitted stage-one
    parameters (h_1 = per-series sample variance)."""
    eps = panel.demeaned()
    if eps.shape[1] != params.n:
        raise ShapeError(
            f"panel has {eps.shape[1]} series but params expect {params.n}"
        )
    z = np.empty_like(eps)
    for j, p in enumerate(params.univariate):
        z[:, j] = garch11_filter(eps[:, j], p, h1=float(eps[:, j].var(ddof=1))).z
    return z


def dcc_cov_path(panel: ReturnPanel, params: DccParams) -> np.ndarray:
    """In-sample conditional covariance path H_t = D_t R_t D_t with
    D_t = diag(sqrt(h_it)) from the fitted stage-one filters."""
    eps = panel.demeaned()
    if eps.shape[1] != params.n:
        raise ShapeError(
            f"panel has {eps.shape[1]} series but params expect {params.n}"
        )
    t_len, n = eps.shape
    h = np.empty((t_len, n))
    z = np.empty_like(eps)
    for j, p in enumerate(params.univariate):
        path = garch11_filter(eps[:, j], p, h1=float(eps[:, j].var(ddof=1)))
        h[:, j] = path.h
        z[:, j] = path.z
    rpath = dcc_filter(z, params)
    d = np.sqrt(h)
    return rpath.r * (d[:, :, None] * d[:, None, :])


def dcc_simulate(
    params: DccParams,
    mu: np.ndarray,
    t_len: int,
    seed: int,
    init: tuple[np.ndarray, np.ndarray] | None = None,
    labels: tuple[str, ...] | None = None,
) -> ReturnPanel:
    """Simulate r_t = mu + D_t R_t^{1/2}-correlated Gaussian shocks.

    ``init`` optionally supplies (h_1 vector, Q_1 matrix); defaults are the
    per-series unconditional variances and q_bar.
    """
    n = params.n
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (n,):
        raise ShapeError(f"mu must have shape ({n},), got {mu.shape}")
    if t_len < 2:
        raise DataError(f"t_len must be >= 2, got {t_len}")
    if init is None:
        h_t = np.array([p.unconditional_var() for p in params.univariate])
        q_t = params.q_bar.copy()
    else:
        h_t = np.asarray(init[0], dtype=float).copy()
        q_t = symmetrize(init[1]).copy()
        if h_t.shape != (n,) or np.any(h_t <= 0.0):
            raise DataError("init variances must be positive with one per series")
        if q_t.shape != (n, n):
            raise ShapeError(f"init Q must be ({n}, {n}), got {q_t.shape}")
    if labels is None:
        labels = tuple(f"S{i + 1}" for i in range(n))
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((t_len, n))
    omega = np.array([p.omega for p in params.univariate])
    alpha = np.array([p.alpha for p in params.univariate])
    beta = np.array([p.beta for p in params.univariate])
    t1, t2 = params.theta1, params.theta2
    intercept = (1.0 - t1 - t2) * params.q_bar
    eps = np.empty((t_len, n))
    for t in range(t_len):
        d = np.sqrt(np.diag(q_t))
        r_t = q_t / np.outer(d, d)
        np.fill_diagonal(r_t, 1.0)
        try:
            low = np.linalg.cholesky(r_t)
        except np.linalg.LinAlgError:
            raise NumericalOverflowError(
                f"simulated correlation lost positive definiteness at t={t}", t=t
            ) from None
        z_t = low @ eta[t]
        eps[t] = np.sqrt(h_t) * z_t
        h_t = omega + alpha * eps[t] ** 2 + beta * h_t
        q_t = intercept + t1 * np.outer(z_t, z_t) + t2 * q_t
    if not np.all(np.isfinite(eps)):
        t = int(np.argwhere(~np.isfinite(eps))[0][0])
        raise NumericalOverflowError(f"simulation overflowed at t={t}", t=t)
    return ReturnPanel(labels=labels, returns=eps + mu, dates=synth_dates(t_len))
