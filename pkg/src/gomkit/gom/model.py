"""Fitting, likelihood evaluation and closed-loop simulation of GOM equations.

Every descriptor ``y`` follows

    y_t = alpha1 * y_{t-1} + alpha2 * y_{t-2} + sum_j beta_j * r_j[t-1] + e_t,

with ``e_t ~ N(0, sigma2)`` and no other noise source. ``alpha2`` is stored
as the signed coefficient that multiplies the raw lag-2 value.

Coefficients are estimated by a Kalman filter whose state is the constant
coefficient vector (recursive least squares with a weak Gaussian prior,
equivalent to a 1e-8 ridge added to the Gram matrix X'X), followed by
Newton polishing steps that use the filter covariance as the inverse
Hessian. ``sigma2`` is profiled out analytically. The maximised
log-likelihood is then evaluated by a companion-form Kalman filter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import kernels
from ..bvh import DescriptorId, MotionClip, descriptor_matrix
from ..errors import (DimensionError, DivergenceError, LengthError,
                      SingularError, TooLongError)
from .topology import GomTopology

RIDGE = 1e-8
SINGULAR_EIG = 1e-15  # reciprocal condition number of the ridged Gram
DIVERGENCE_LIMIT = 1e4
ORACLE_MAX_T = 12
NEWTON_STEPS = 3


@dataclass
class GomModel:
    descriptor: DescriptorId
    alpha: tuple
    betas: dict
    obs_noise_var: float
    p_values: dict
    log_likelihood: float
    std_errors: dict = field(default_factory=dict)
    n_obs: int = 0
    degenerate: bool = False

    def coefficients(self) -> np.ndarray:
        return np.array([self.alpha[0], self.alpha[1], *self.betas.values()], dtype=float)

    def term_names(self) -> list:
        return ["alpha1", "alpha2", *[str(r) for r in self.betas]]


@dataclass
class GomSystem:
    topology: GomTopology
    models: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.models) != set(self.topology.descriptors):
            raise ValueError("system models must cover exactly the topology descriptors")

    @property
    def frame_time(self):
        return self.metadata.get("frame_time")

    def lag_matrices(self):
        """``(lag1, lag2)`` so that y_t = lag1 @ y_{t-1} + lag2 * y_{t-2}."""
        descs = self.topology.descriptors
        idx = {d: i for i, d in enumerate(descs)}
        D = len(descs)
        lag1 = np.zeros((D, D))
        lag2 = np.zeros(D)
        for i, d in enumerate(descs):
            m = self.models[d]
            lag1[i, i] = m.alpha[0]
            lag2[i] = m.alpha[1]
            for r, b in m.betas.items():
                lag1[i, idx[r]] += b
        return lag1, lag2


# --------------------------------------------------------------------------
# design matrices

def design(series: np.ndarray, regressors: np.ndarray):
    """Regression form of one equation: rows t = 2..T-1.

    ``series`` has length T; ``regressors`` is T x k. Returns ``(y, X)``
    with X columns ``[y_{t-1}, y_{t-2}, r_1[t-1], ...]``.
    """
    y = np.asarray(series, dtype=float)
    R = np.asarray(regressors, dtype=float).reshape(len(y), -1)
    X = np.column_stack([y[1:-1], y[:-2], R[1:-1]])
    return y[2:], X


def _exog_contribution(betas, regressors, n):
    R = np.asarray(regressors, dtype=float).reshape(n, -1)
    e = np.zeros(n)
    if R.shape[1]:
        e[1:] = R[:-1] @ np.asarray(betas, dtype=float)
    return e


def _check_regressors(model: GomModel, series, regressors):
    y = np.asarray(series, dtype=float)
    R = np.asarray(() if regressors is None else regressors, dtype=float)
    if R.size == 0:
        R = np.zeros((len(y), 0))
    if R.ndim == 1:
        R = R[:, None]
    if R.shape != (len(y), len(model.betas)):
        raise DimensionError(f"regressors must be {len(y)} x {len(model.betas)}, got {R.shape}")
    if len(y) < 3:
        raise LengthError("need at least 3 frames (2 seeds + 1 observation)")
    return y, R


def kalman_loglik(model: GomModel, series, regressors, init_cov=None) -> float:
    """Log-likelihood of ``series[2:]`` given the first two frames.

    ``init_cov`` (2x2, over ``(y_1, y_0)``) makes the seed frames uncertain;
    by default they are treated as known.
    """
    y, R = _check_regressors(model, series, regressors)
    exog = _exog_contribution(list(model.betas.values()), R, len(y))
    P0 = np.zeros((2, 2)) if init_cov is None else np.asarray(init_cov, dtype=float)
    m0 = np.array([y[1], y[0]])
    ll, _ = kernels.arx_kalman(np.ascontiguousarray(y), exog, float(model.alpha[0]),
                               float(model.alpha[1]), float(model.obs_noise_var), m0, P0)
    return float(ll)


def loglik_oracle(model: GomModel, series, regressors, init_cov=None) -> float:
    """Dense joint-Gaussian log-density of ``series[2:]``; no recursion.

    Writing the equation for all t at once gives ``L y = b + G x0 + e`` with
    L unit lower-triangular banded, so ``y ~ N(L^-1 (b + G m0),
    L^-1 (G P0 G' + sigma2 I) L^-T)``.
    """
    y, R = _check_regressors(model, series, regressors)
    T = len(y) - 2
    if T > ORACLE_MAX_T:
        raise TooLongError(f"oracle handles at most {ORACLE_MAX_T} observations, got {T}")
    a1, a2 = (float(a) for a in model.alpha)
    L = np.eye(T) - a1 * np.eye(T, k=-1) - a2 * np.eye(T, k=-2)
    b = _exog_contribution(list(model.betas.values()), R, len(y))[2:]
    G = np.zeros((T, 2))
    G[0] = (a1, a2)
    if T > 1:
        G[1, 0] = a2
    x0 = np.array([y[1], y[0]])
    P0 = np.zeros((2, 2)) if init_cov is None else np.asarray(init_cov, dtype=float)
    Linv = np.linalg.inv(L)
    mean = Linv @ (b + G @ x0)
    cov = Linv @ (G @ P0 @ G.T + model.obs_noise_var * np.eye(T)) @ Linv.T
    return float(stats.multivariate_normal(mean, cov).logpdf(y[2:]))


# --------------------------------------------------------------------------
# fitting

def fit_equation(series, regressors=None, descriptor=None, regressor_ids=None) -> GomModel:
    """Fit a single equation; ``regressors`` is T x k (or None for pure AR(2)).

    Raises SingularError when the target is constant, an own lag vanishes or
    the scaled Gram matrix is numerically rank deficient.
    """
    series = np.asarray(series, dtype=float)
    if regressors is None:
        regressors = np.zeros((len(series), 0))
    regressors = np.asarray(regressors, dtype=float).reshape(len(series), -1)
    desc = descriptor if descriptor is not None else DescriptorId("Y", "X")
    reg_ids = (list(regressor_ids) if regressor_ids is not None
               else [DescriptorId(f"R{j + 1}", "X") for j in range(regressors.shape[1])])
    if len(reg_ids) != regressors.shape[1]:
        raise DimensionError("regressor_ids must name every regressor column")
    if len(series) < 3 + regressors.shape[1]:
        raise LengthError(f"need at least {3 + regressors.shape[1]} frames")
    return _fit_equation(desc, series, regressors, reg_ids)


def _fit_equation(desc, series, regressors, reg_ids) -> GomModel:
    y, X = design(series, regressors)
    n, k = X.shape
    if np.ptp(series) == 0:
        raise SingularError(f"{desc}: reference series is constant", [desc])
    scale = np.sqrt(np.mean(X * X, axis=0))
    active = scale > 0
    if not active[0] or not active[1]:
        raise SingularError(f"{desc}: own lags vanish", [desc])
    Z = X[:, active] / scale[active]
    ka = Z.shape[1]
    # ridge acts on the raw Gram X'X; in scaled coordinates it becomes RIDGE / scale^2
    lam = RIDGE / scale[active] ** 2
    eig = np.linalg.eigvalsh(Z.T @ Z + np.diag(lam))
    if eig[0] < SINGULAR_EIG * eig[-1]:
        raise SingularError(f"{desc}: regressors are collinear even after the ridge "
                            f"(condition number {eig[-1] / max(eig[0], 1e-300):.3g})", [desc])
    theta, P = kernels.rls_filter(np.ascontiguousarray(Z), np.ascontiguousarray(y),
                                  np.zeros(ka), np.diag(1.0 / lam))
    for _ in range(NEWTON_STEPS):
        grad = Z.T @ (y - Z @ theta) - lam * theta
        step = P @ grad
        theta = theta + step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(theta))):
            break
    resid = y - Z @ theta
    sigma2 = float(resid @ resid) / n
    sigma2 = max(sigma2, 1e-12 * float(np.mean(y * y)), np.finfo(float).tiny)
    se_z = np.sqrt(np.maximum(np.diag(P), 0.0) * sigma2)

    coef = np.zeros(k)
    se = np.full(k, np.inf)
    coef[active] = theta / scale[active]
    se[active] = se_z / scale[active]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(np.isfinite(se) & (se > 0), np.abs(coef) / se, 0.0)
    pvals = np.clip(2.0 * stats.norm.sf(z), 0.0, 1.0)

    names = ["alpha1", "alpha2", *[str(r) for r in reg_ids]]
    model = GomModel(
        descriptor=desc,
        alpha=(float(coef[0]), float(coef[1])),
        betas={r: float(c) for r, c in zip(reg_ids, coef[2:])},
        obs_noise_var=sigma2,
        p_values=dict(zip(names, map(float, pvals))),
        log_likelihood=0.0,
        std_errors=dict(zip(names, map(float, se))),
        n_obs=n,
    )
    model.log_likelihood = kalman_loglik(model, series, regressors)
    return model


def hold_model(desc, reg_ids) -> GomModel:
    """Stand-in for an unidentifiable equation: repeat the previous value."""
    names = ["alpha1", "alpha2", *[str(r) for r in reg_ids]]
    return GomModel(desc, (1.0, 0.0), {r: 0.0 for r in reg_ids}, np.finfo(float).tiny,
                    {n: 1.0 for n in names}, 0.0, {n: math.inf for n in names},
                    degenerate=True)


def fit(reference, topology: GomTopology, aliases=None, on_singular: str = "raise",
        metadata=None) -> GomSystem:
    """Fit one equation per topology descriptor on a single reference.

    ``reference`` is a MotionClip or a T x D matrix whose columns follow
    ``topology.descriptors``. With ``on_singular="hold"`` unidentifiable
    equations are replaced by :func:`hold_model` instead of raising.
    """
    meta = dict(metadata or {})
    if isinstance(reference, MotionClip):
        data = descriptor_matrix(reference, topology.descriptors, aliases)
        meta.setdefault("frame_time", reference.frame_time)
        meta.setdefault("source", reference.name)
    else:
        data = np.asarray(reference, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(topology.descriptors):
        raise DimensionError(f"reference must be T x {len(topology.descriptors)}")
    need = 3 + topology.width
    if data.shape[0] < need:
        raise LengthError(f"reference has {data.shape[0]} frames, need at least {need}")
    col = {d: i for i, d in enumerate(topology.descriptors)}
    models, failed = {}, []
    for d in topology.descriptors:
        reg_ids = [r for r, _ in topology.regressors[d]]
        R = data[:, [col[r] for r in reg_ids]] if reg_ids else np.zeros((len(data), 0))
        try:
            models[d] = _fit_equation(d, data[:, col[d]], R, reg_ids)
        except SingularError:
            if on_singular != "hold":
                failed.append(d)
                continue
            models[d] = hold_model(d, reg_ids)
    if failed:
        raise SingularError("singular equations: " + ", ".join(map(str, failed)),
                            failed, models)
    return GomSystem(topology, models, meta)


# --------------------------------------------------------------------------
# simulation

def simulate(system: GomSystem, seed_frames, horizon: int) -> np.ndarray:
    """Closed-loop generation: every step consumes only simulated values."""
    seed = np.asarray(seed_frames, dtype=float)
    D = len(system.topology.descriptors)
    if seed.shape != (2, D):
        raise DimensionError(f"seed must be 2 x {D}, got {seed.shape}")
    if not np.all(np.isfinite(seed)):
        raise DivergenceError("seed frames must be finite")
    if horizon < 2:
        raise LengthError("horizon must be at least 2")
    lag1, lag2 = system.lag_matrices()
    out, bad = kernels.simulate_bank(seed[0].copy(), seed[1].copy(), lag1, lag2,
                                     int(horizon), DIVERGENCE_LIMIT)
    if bad >= 0:
        row = lag1 @ out[bad - 1] + lag2 * out[bad - 2]
        worst = int(np.argmax(np.where(np.isfinite(row), np.abs(row), np.inf)))
        raise DivergenceError(f"simulation diverged at step {bad}: "
                              f"{system.topology.descriptors[worst]} exceeds "
                              f"+-{DIVERGENCE_LIMIT:g} deg")
    return out


def one_step_predict(system: GomSystem, observed) -> np.ndarray:
    """Teacher-forced predictions (diagnostics only); rows 0 and 1 are copied."""
    Y = np.asarray(observed, dtype=float)
    lag1, lag2 = system.lag_matrices()
    out = Y.copy()
    out[2:] = Y[1:-1] @ lag1.T + Y[:-2] * lag2
    return out
