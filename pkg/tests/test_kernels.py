"""The numba and numpy kernel twins must agree.

Without numba the ``*_numba`` names are the same loops run as plain Python,
so these comparisons stay meaningful either way.
"""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from gomkit import _accel, kernels


def test_dtw_accumulate(rng):
    for shape in [(1, 1), (1, 5), (6, 1), (7, 9), (30, 17)]:
        c = rng.random(shape)
        np.testing.assert_allclose(kernels.dtw_accumulate_numba(c),
                                   kernels.dtw_accumulate_numpy(c), rtol=1e-14)


def test_rls_filter(rng):
    X = rng.standard_normal((80, 4))
    y = X @ [1.0, -0.5, 0.2, 0.0] + 0.1 * rng.standard_normal(80)
    P0 = np.eye(4) * 1e6
    a = kernels.rls_filter_numba(X, y, np.zeros(4), P0)
    b = kernels.rls_filter_numpy(X, y, np.zeros(4), P0)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-9, atol=1e-12)


def test_arx_kalman(rng):
    y = rng.standard_normal(40)
    exog = rng.standard_normal(40)
    P0 = np.array([[1.0, 0.2], [0.2, 0.5]])
    m0 = np.array([y[1], y[0]])
    a = kernels.arx_kalman_numba(y, exog, 0.6, -0.2, 0.8, m0, P0)
    b = kernels.arx_kalman_numpy(y, exog, 0.6, -0.2, 0.8, m0, P0)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-12)


def test_simulate_bank(rng):
    D = 5
    lag1 = 0.3 * rng.standard_normal((D, D)) + np.eye(D) * 0.5
    lag2 = -0.2 * np.ones(D)
    s0, s1 = rng.standard_normal(D), rng.standard_normal(D)
    a = kernels.simulate_numba(s0, s1, lag1, lag2, 60, 1e4)
    b = kernels.simulate_numpy(s0, s1, lag1, lag2, 60, 1e4)
    assert a[1] == b[1]
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-12)
    boom = kernels.simulate_numba(s0, s1, lag1 * 10, lag2, 60, 1e4)
    assert boom[1] == kernels.simulate_numpy(s0, s1, lag1 * 10, lag2, 60, 1e4)[1] > 0


def test_forward_backward_xi(rng):
    n, T = 4, 25
    A = rng.random((n, n))
    A /= A.sum(1, keepdims=True)
    pi = rng.random(n)
    pi /= pi.sum()
    log_A, log_pi = np.log(A), np.log(pi)
    log_B = rng.normal(-3, 2, (T, n))
    fa, la = kernels.forward_numba(log_pi, log_A, log_B)
    fb, lb = kernels.forward_numpy(log_pi, log_A, log_B)
    assert la == pytest.approx(lb, rel=1e-12)
    np.testing.assert_allclose(fa, fb, rtol=1e-12)
    ba = kernels.backward_numba(log_A, log_B)
    bb = kernels.backward_numpy(log_A, log_B)
    np.testing.assert_allclose(ba, bb, rtol=1e-12)
    np.testing.assert_allclose(kernels.xi_sum_numba(fa, ba, log_A, log_B, la),
                               kernels.xi_sum_numpy(fb, bb, log_A, log_B, lb), rtol=1e-10)


FALLBACK_SCRIPT = """
import json, numpy as np
from gomkit import backend
from gomkit.similarity import dtw_cost
from gomkit.gom import fit_equation
from gomkit.recognition import hmm_fit
rng = np.random.default_rng(0)
a, b = rng.standard_normal((20, 3)), rng.standard_normal((15, 3))
y = np.cumsum(rng.standard_normal(300))
m = fit_equation(y, rng.standard_normal((300, 2)))
h = hmm_fit([rng.standard_normal((40, 2)) for _ in range(3)], 3)
print(json.dumps({"backend": backend(), "dtw": dtw_cost(a, b),
                  "coef": m.coefficients().tolist(), "ll": m.log_likelihood,
                  "hmm": h.history[-1]}))
"""


def _run(disable):
    env = dict(os.environ, GOMKIT_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", FALLBACK_SCRIPT], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out)


def test_environment_flag_selects_numpy_path():
    slow = _run(True)
    assert slow["backend"] == "numpy"
    if not _accel.HAS_NUMBA:
        return
    fast = _run(False)
    assert fast["backend"] == "numba"
    assert slow["dtw"] == pytest.approx(fast["dtw"], rel=1e-12)
    np.testing.assert_allclose(slow["coef"], fast["coef"], rtol=1e-9)
    assert slow["ll"] == pytest.approx(fast["ll"], rel=1e-9)
    assert slow["hmm"] == pytest.approx(fast["hmm"], rel=1e-9)
