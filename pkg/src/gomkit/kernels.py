"""Hot inner loops, each in a numba and a pure-numpy flavour.

Public names (``dtw_accumulate``, ``rls_filter`` ...) are bound to one flavour
at import time according to :mod:`gomkit._accel`. Both flavours stay
importable under ``*_numba`` / ``*_numpy`` so tests and the benchmark can
compare them directly.
"""
import math

import numpy as np
from scipy.special import logsumexp

from ._accel import USE_NUMBA, njit

LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# DTW accumulated cost


@njit
def _dtw_accumulate_loop(cost):
    n, m = cost.shape
    acc = np.empty((n, m))
    acc[0, 0] = cost[0, 0]
    for j in range(1, m):
        acc[0, j] = cost[0, j] + acc[0, j - 1]
    for i in range(1, n):
        acc[i, 0] = cost[i, 0] + acc[i - 1, 0]
        for j in range(1, m):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i, j] + best
    return acc


dtw_accumulate_numba = _dtw_accumulate_loop


def dtw_accumulate_numpy(cost):
    """Anti-diagonal sweep: every cell on diagonal k depends on k-1 and k-2 only."""
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for k in range(n + m - 1):
        i = np.arange(max(0, k - m + 1), min(n, k + 1))
        j = k - i
        prev = np.minimum(np.minimum(acc[i, j], acc[i, j + 1]), acc[i + 1, j])
        acc[i + 1, j + 1] = cost[i, j] + prev
    return acc[1:, 1:]


# --------------------------------------------------------------------------
# Recursive least squares: Kalman filter whose state is a constant
# coefficient vector (identity transition, no process noise, unit
# observation variance).


@njit
def _rls_loop(X, y, theta0, P0):
    n, k = X.shape
    theta = theta0.copy()
    P = P0.copy()
    Ph = np.empty(k)
    for t in range(n):
        for a in range(k):
            s = 0.0
            for b in range(k):
                s += P[a, b] * X[t, b]
            Ph[a] = s
        S = 1.0
        pred = 0.0
        for a in range(k):
            S += X[t, a] * Ph[a]
            pred += X[t, a] * theta[a]
        v = y[t] - pred
        for a in range(k):
            theta[a] += Ph[a] * v / S
        for a in range(k):
            for b in range(a, k):
                val = P[a, b] - Ph[a] * Ph[b] / S
                P[a, b] = val
                P[b, a] = val
    return theta, P


rls_filter_numba = _rls_loop


def rls_filter_numpy(X, y, theta0, P0):
    theta = np.array(theta0, dtype=float)
    P = np.array(P0, dtype=float)
    for h, obs in zip(X, y):
        Ph = P @ h
        S = 1.0 + h @ Ph
        theta = theta + Ph * ((obs - h @ theta) / S)
        P = P - np.outer(Ph, Ph) / S
        P = 0.5 * (P + P.T)
    return theta, P


# --------------------------------------------------------------------------
# Companion-form Kalman filter for one ARX(2) equation.
# State x_t = (y_t, y_{t-1}); the driving noise of variance sigma2 enters
# the first state component; y_t is observed without extra noise.


@njit
def _arx_kalman_loop(y, exog, a1, a2, sigma2, m0, P0):
    n = y.shape[0]
    m_0 = m0[0]
    m_1 = m0[1]
    p00 = P0[0, 0]
    p01 = P0[0, 1]
    p11 = P0[1, 1]
    ll = 0.0
    innov = np.zeros(n)
    for t in range(2, n):
        # predict
        pm0 = a1 * m_0 + a2 * m_1 + exog[t]
        pm1 = m_0
        q00 = a1 * a1 * p00 + 2.0 * a1 * a2 * p01 + a2 * a2 * p11 + sigma2
        q01 = a1 * p00 + a2 * p01
        q11 = p00
        # update with the noiseless observation of the first component
        v = y[t] - pm0
        S = q00
        innov[t] = v
        ll += -0.5 * (LOG_2PI + math.log(S) + v * v / S)
        k1 = q01 / S
        m_0 = y[t]
        m_1 = pm1 + k1 * v
        p00 = 0.0
        p01 = 0.0
        p11 = q11 - q01 * q01 / S
        if p11 < 0.0:
            p11 = 0.0
    return ll, innov


arx_kalman_numba = _arx_kalman_loop


def arx_kalman_numpy(y, exog, a1, a2, sigma2, m0, P0):
    F = np.array([[a1, a2], [1.0, 0.0]])
    Q = np.array([[sigma2, 0.0], [0.0, 0.0]])
    m = np.array(m0, dtype=float)
    P = np.array(P0, dtype=float)
    ll = 0.0
    innov = np.zeros(len(y))
    for t in range(2, len(y)):
        m = F @ m
        m[0] += exog[t]
        P = F @ P @ F.T + Q
        v = y[t] - m[0]
        S = P[0, 0]
        innov[t] = v
        ll += -0.5 * (LOG_2PI + math.log(S) + v * v / S)
        K = P[:, 0] / S
        m = m + K * v
        P = P - np.outer(K, P[0, :])
        P[0, :] = 0.0
        P[:, 0] = 0.0
        P[1, 1] = max(P[1, 1], 0.0)
    return ll, innov


# --------------------------------------------------------------------------
# Closed-loop simulation of a whole equation bank.
# y_t = lag1 @ y_{t-1} + lag2 * y_{t-2}; lag1 holds alpha1 on the diagonal
# and the exogenous betas off it.


@njit
def _simulate_loop(seed0, seed1, lag1, lag2, horizon, limit):
    d = seed0.shape[0]
    out = np.empty((horizon, d))
    out[0] = seed0
    if horizon > 1:
        out[1] = seed1
    for t in range(2, horizon):
        for i in range(d):
            s = lag2[i] * out[t - 2, i]
            for j in range(d):
                s += lag1[i, j] * out[t - 1, j]
            if not (abs(s) <= limit):
                return out, t
            out[t, i] = s
    return out, -1


simulate_numba = _simulate_loop


def simulate_numpy(seed0, seed1, lag1, lag2, horizon, limit):
    d = len(seed0)
    out = np.empty((horizon, d))
    out[0] = seed0
    if horizon > 1:
        out[1] = seed1
    for t in range(2, horizon):
        row = lag1 @ out[t - 1] + lag2 * out[t - 2]
        if not np.all(np.abs(row) <= limit):
            return out, t
        out[t] = row
    return out, -1


# --------------------------------------------------------------------------
# HMM forward / backward in log space


@njit
def _lse(v):
    mx = -np.inf
    for x in v:
        if x > mx:
            mx = x
    if mx == -np.inf:
        return mx
    s = 0.0
    for x in v:
        s += math.exp(x - mx)
    return mx + math.log(s)


@njit
def _forward_loop(log_pi, log_A, log_B):
    T, n = log_B.shape
    alpha = np.empty((T, n))
    tmp = np.empty(n)
    for j in range(n):
        alpha[0, j] = log_pi[j] + log_B[0, j]
    for t in range(1, T):
        for j in range(n):
            for i in range(n):
                tmp[i] = alpha[t - 1, i] + log_A[i, j]
            alpha[t, j] = _lse(tmp) + log_B[t, j]
    return alpha, _lse(alpha[T - 1])


@njit
def _backward_loop(log_A, log_B):
    T, n = log_B.shape
    beta = np.empty((T, n))
    tmp = np.empty(n)
    for j in range(n):
        beta[T - 1, j] = 0.0
    for t in range(T - 2, -1, -1):
        for i in range(n):
            for j in range(n):
                tmp[j] = log_A[i, j] + log_B[t + 1, j] + beta[t + 1, j]
            beta[t, i] = _lse(tmp)
    return beta


@njit
def _xi_sum_loop(log_alpha, log_beta, log_A, log_B, ll):
    T, n = log_B.shape
    out = np.zeros((n, n))
    for t in range(1, T):
        for i in range(n):
            a = log_alpha[t - 1, i]
            if a == -np.inf:
                continue
            for j in range(n):
                v = a + log_A[i, j] + log_B[t, j] + log_beta[t, j] - ll
                if v > -745.0:
                    out[i, j] += math.exp(v)
    return out


forward_numba = _forward_loop
backward_numba = _backward_loop
xi_sum_numba = _xi_sum_loop


def forward_numpy(log_pi, log_A, log_B):
    T, n = log_B.shape
    alpha = np.empty((T, n))
    alpha[0] = log_pi + log_B[0]
    for t in range(1, T):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + log_A, axis=0) + log_B[t]
    return alpha, float(logsumexp(alpha[-1]))


def backward_numpy(log_A, log_B):
    T, n = log_B.shape
    beta = np.zeros((T, n))
    for t in range(T - 2, -1, -1):
        beta[t] = logsumexp(log_A + (log_B[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def xi_sum_numpy(log_alpha, log_beta, log_A, log_B, ll):
    if len(log_B) < 2:
        return np.zeros(log_A.shape)
    with np.errstate(invalid="ignore"):
        v = (log_alpha[:-1, :, None] + log_A[None, :, :]
             + (log_B[1:] + log_beta[1:])[:, None, :] - ll)
    v = np.where(np.isnan(v), -np.inf, v)
    return np.exp(v).sum(axis=0)


if USE_NUMBA:
    dtw_accumulate = dtw_accumulate_numba
    rls_filter = rls_filter_numba
    arx_kalman = arx_kalman_numba
    simulate_bank = simulate_numba
    forward = forward_numba
    backward = backward_numba
    xi_sum = xi_sum_numba
else:
    dtw_accumulate = dtw_accumulate_numpy
    rls_filter = rls_filter_numpy
    arx_kalman = arx_kalman_numpy
    simulate_bank = simulate_numpy
    forward = forward_numpy
    backward = backward_numpy
    xi_sum = xi_sum_numpy
