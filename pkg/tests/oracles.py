"""Independent reference implementations used by the tests.

Nothing here imports the code under test beyond plain data types, so each
oracle checks the library against a different computation.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


# --------------------------------------------------------------------------
# DTW: enumerate every monotone path

def dtw_paths(n: int, m: int):
    """All warping paths from (0, 0) to (n-1, m-1) with unit steps."""
    def rec(i, j):
        if (i, j) == (n - 1, m - 1):
            yield [(i, j)]
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                for tail in rec(a, b):
                    yield [(i, j)] + tail
    yield from rec(0, 0)


def dtw_brute(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(len(a), -1)
    b = np.asarray(b, dtype=float).reshape(len(b), -1)
    best = math.inf
    for path in dtw_paths(len(a), len(b)):
        total = 0.0
        for i, j in path:
            d = a[i] - b[j]
            total = total + float(np.sqrt(np.sum(d * d)))
        best = min(best, total)
    return best


# --------------------------------------------------------------------------
# HMM: sum over every hidden state path

def hmm_brute_loglik(pi, A, means, variances, X) -> float:
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    n, T = len(pi), len(X)

    def dens(k, x):
        v = variances[k]
        return float(np.prod(np.exp(-0.5 * (x - means[k]) ** 2 / v) / np.sqrt(2 * np.pi * v)))

    total = 0.0
    for path in itertools.product(range(n), repeat=T):
        p = pi[path[0]] * dens(path[0], X[0])
        for t in range(1, T):
            p *= A[path[t - 1], path[t]] * dens(path[t], X[t])
        total += p
    return math.log(total)


def sample_hmm(rng, pi, A, means, sd, T):
    states = np.empty(T, dtype=int)
    states[0] = rng.choice(len(pi), p=pi)
    for t in range(1, T):
        states[t] = rng.choice(len(pi), p=A[states[t - 1]])
    return means[states] + sd * rng.standard_normal(T), states


# --------------------------------------------------------------------------
# GOM equations

def arx_series(rng, T, alpha=(1.5, -0.7), betas=(), sigma=0.1, exog=None):
    """Simulate y_t = a1 y_{t-1} + a2 y_{t-2} + sum b_j r_j[t-1] + e_t."""
    betas = np.asarray(betas, dtype=float)
    R = rng.standard_normal((T, len(betas))) if exog is None else np.asarray(exog, dtype=float)
    y = np.zeros(T)
    e = sigma * rng.standard_normal(T)
    for t in range(2, T):
        y[t] = alpha[0] * y[t - 1] + alpha[1] * y[t - 2] + R[t - 1] @ betas + e[t]
    return y, R


def ridge_ols(y, R, ridge=1e-8):
    """Solve (X'X + ridge I) theta = X'y through an augmented least-squares system."""
    y = np.asarray(y, dtype=float)
    R = np.asarray(R, dtype=float).reshape(len(y), -1)
    X = np.column_stack([y[1:-1], y[:-2], R[1:-1]])
    k = X.shape[1]
    A = np.vstack([X, math.sqrt(ridge) * np.eye(k)])
    b = np.concatenate([y[2:], np.zeros(k)])
    return np.linalg.lstsq(A, b, rcond=None)[0]


# --------------------------------------------------------------------------
# Butterworth magnitude response

def butter_gain(f, cutoff, order):
    """|H| of an analog Butterworth low-pass, applied twice (forward-backward)."""
    return 1.0 / (1.0 + (f / cutoff) ** (2 * order))


def prewarped_gain(f, cutoff, order, fs):
    """Same response on the bilinear-transform frequency axis used by digital designs."""
    w = np.tan(np.pi * f / fs)
    wc = np.tan(np.pi * cutoff / fs)
    return 1.0 / (1.0 + (w / wc) ** (2 * order))


# --------------------------------------------------------------------------
# BVH documents

CHANNEL_POOL = ("Xposition", "Yposition", "Zposition", "Xrotation", "Yrotation", "Zrotation")


def random_bvh(rng, max_joints=30, max_frames=500):
    """A random valid BVH document and its expected structure and values.

    Returns ``(text, joints, frames)`` where ``joints`` is a list of
    ``(name, parent_index, offset, channels)`` in file order.
    """
    n = int(rng.integers(1, max_joints + 1))
    parents = [None] + [int(rng.integers(0, i)) for i in range(1, n)]
    children = {i: [c for c in range(n) if parents[c] == i] for i in range(n)}
    joints, lines = [], ["HIERARCHY"]

    def chans():
        k = int(rng.integers(0, 7))
        return tuple(rng.permutation(CHANNEL_POOL)[:k].tolist())

    def emit(i, depth):
        pad = "  " * depth
        name = f"J{i}"
        off = tuple(np.round(rng.uniform(-50, 50, 3), 4).tolist())
        ch = chans() if i else ("Xposition", "Yposition", "Zposition",
                                "Zrotation", "Xrotation", "Yrotation")
        kw = "ROOT" if i == 0 else "JOINT"
        lines.append(f"{pad}{kw} {name}")
        lines.append(f"{pad}{{")
        lines.append(f"{pad}  OFFSET {off[0]} {off[1]} {off[2]}")
        lines.append(f"{pad}  CHANNELS {len(ch)} {' '.join(ch)}".rstrip())
        me = len(joints)
        joints.append((name, None if i == 0 else parent_slot[i], off, ch))
        for c in children[i]:
            parent_slot[c] = me
            emit(c, depth + 1)
        if not children[i]:
            lines.append(f"{pad}  End Site")
            lines.append(f"{pad}  {{")
            lines.append(f"{pad}    OFFSET 0 1 0")
            lines.append(f"{pad}  }}")
            joints.append(("End Site", me, (0.0, 1.0, 0.0), ()))
        lines.append(f"{pad}}}")

    parent_slot = {0: None}
    emit(0, 0)
    C = sum(len(j[3]) for j in joints)
    T = int(rng.integers(1, max_frames + 1))
    frames = np.round(rng.uniform(-180, 180, (T, C)), 6)
    lines += ["MOTION", f"Frames: {T}", "Frame Time: 0.0111111"]
    lines += [" ".join(f"{v:.6f}" for v in row) for row in frames]
    return "\n".join(lines) + "\n", joints, frames
