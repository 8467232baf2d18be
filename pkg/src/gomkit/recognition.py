"""Gesture recognition with diagonal-Gaussian hidden Markov models."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score
from sklearn.model_selection import StratifiedKFold

from . import kernels
from .errors import (DegenerateDataError, DimensionError, EmptyModelSetError,
                     InsufficientDataError)

log = logging.getLogger(__name__)

LEFT_TO_RIGHT = "left_to_right"
ERGODIC = "ergodic"
VAR_FLOOR = 1e-6
TOL = 1e-4
MAX_ITER = 100


@dataclass
class HmmModel:
    n_states: int
    topology: str
    startprob: np.ndarray
    transmat: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def log_emission(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        diff = X[:, None, :] - self.means[None, :, :]
        return -0.5 * (np.sum(np.log(2 * np.pi * self.variances), axis=1)[None, :]
                       + np.sum(diff * diff / self.variances[None, :, :], axis=2))


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


def _as_seq(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return np.ascontiguousarray(a)


def _init(seqs, n, topology):
    D = seqs[0].shape[1]
    sums = np.zeros((n, D))
    sq = np.zeros((n, D))
    cnt = np.zeros(n)
    for X in seqs:
        for k, block in enumerate(np.array_split(X, n)):
            if len(block):
                sums[k] += block.sum(axis=0)
                sq[k] += (block * block).sum(axis=0)
                cnt[k] += len(block)
    cnt = np.maximum(cnt, 1)
    means = sums / cnt[:, None]
    pooled = np.var(np.vstack(seqs), axis=0)
    var = np.where(cnt[:, None] > 1, sq / cnt[:, None] - means ** 2, pooled[None, :])
    var = np.maximum(var, VAR_FLOOR)
    dwell = max(np.mean([len(X) for X in seqs]) / n, 1.0)
    stay = 1.0 - 1.0 / dwell if dwell > 1 else 0.5
    A = np.zeros((n, n))
    if topology == LEFT_TO_RIGHT:
        for i in range(n - 1):
            A[i, i], A[i, i + 1] = stay, 1.0 - stay
        A[n - 1, n - 1] = 1.0
        pi = np.zeros(n)
        pi[0] = 1.0
    else:
        A[:] = (1.0 - stay) / max(n - 1, 1)
        np.fill_diagonal(A, stay if n > 1 else 1.0)
        pi = np.full(n, 1.0 / n)
    return pi, A, means, var


def _e_step(model, seqs):
    n, D = model.means.shape
    log_pi, log_A = _log(model.startprob), _log(model.transmat)
    acc = {"pi": np.zeros(n), "xi": np.zeros((n, n)), "g": np.zeros(n),
           "gx": np.zeros((n, D)), "gxx": np.zeros((n, D))}
    total = 0.0
    for X in seqs:
        log_B = np.ascontiguousarray(model.log_emission(X))
        alpha, ll = kernels.forward(log_pi, log_A, log_B)
        beta = kernels.backward(log_A, log_B)
        total += ll
        gamma = np.exp(alpha + beta - ll)
        acc["pi"] += gamma[0]
        acc["xi"] += kernels.xi_sum(alpha, beta, log_A, log_B, ll)
        acc["g"] += gamma.sum(axis=0)
        acc["gx"] += gamma.T @ X
        acc["gxx"] += gamma.T @ (X * X)
    return total, acc


def _m_step(model, acc, n_seqs):
    if model.topology == ERGODIC:
        model.startprob = acc["pi"] / n_seqs
    rows = acc["xi"].sum(axis=1)
    ok = rows > 0
    A = model.transmat.copy()
    A[ok] = acc["xi"][ok] / rows[ok, None]
    model.transmat = A
    used = acc["g"] > 1e-10
    g = acc["g"][used, None]
    means = acc["gx"][used] / g
    var = acc["gxx"][used] / g - means ** 2
    model.means[used] = means
    model.variances[used] = np.maximum(var, VAR_FLOOR)


def hmm_fit(sequences, n_states: int, topology: str = LEFT_TO_RIGHT,
            tol: float = TOL, max_iter: int = MAX_ITER) -> HmmModel:
    """Baum-Welch training on one or more T_i x D sequences.

    Stops when the total log-likelihood improves by less than ``tol`` or
    after ``max_iter`` iterations. ``model.history`` records the
    log-likelihood seen at every iteration.
    """
    seqs = [_as_seq(s) for s in sequences]
    if not seqs:
        raise InsufficientDataError("need at least one training sequence")
    if topology not in (LEFT_TO_RIGHT, ERGODIC):
        raise ValueError(f"unknown HMM topology {topology!r}")
    dims = {s.shape[1] for s in seqs}
    if len(dims) != 1:
        raise DimensionError(f"sequences differ in feature dimension: {sorted(dims)}")
    if topology == LEFT_TO_RIGHT and min(len(s) for s in seqs) < n_states:
        raise InsufficientDataError(f"left-to-right training needs sequences of at least "
                                    f"{n_states} frames")
    stacked = np.vstack(seqs)
    spread = np.var(stacked, axis=0)
    flat = np.flatnonzero(spread <= 1e-12 * (1.0 + np.mean(stacked * stacked, axis=0)))
    if flat.size:
        raise DegenerateDataError(f"features {flat.tolist()} have zero variance")

    pi, A, means, var = _init(seqs, n_states, topology)
    model = HmmModel(n_states, topology, pi, A, means, var)
    prev = -math.inf
    for _ in range(max_iter):
        ll, acc = _e_step(model, seqs)
        model.history.append(float(ll))
        if ll - prev < tol:
            break
        prev = ll
        _m_step(model, acc, len(seqs))
    return model


def loglik(model: HmmModel, sequence) -> float:
    """Forward-algorithm log-probability of one sequence."""
    X = _as_seq(sequence)
    if X.shape[1] != model.n_features:
        raise DimensionError(f"sequence has {X.shape[1]} features, model expects "
                             f"{model.n_features}")
    log_B = np.ascontiguousarray(model.log_emission(X))
    _, ll = kernels.forward(_log(model.startprob), _log(model.transmat), log_B)
    return float(ll)


def classify(models: dict, sequence):
    """Label whose model gives the highest log-likelihood; ties by label order."""
    if not models:
        raise EmptyModelSetError("no class models to compare")
    best, best_ll = None, -math.inf
    for label in sorted(models):
        ll = loglik(models[label], sequence)
        if best is None or ll > best_ll:
            best, best_ll = label, ll
    return best


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, sequences) -> "Standardizer":
        X = np.vstack([_as_seq(s) for s in sequences])
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, sequence) -> np.ndarray:
        return (_as_seq(sequence) - self.mean) / self.std


def train_classifier(sequences, labels, n_states, topology=LEFT_TO_RIGHT):
    """Standardise on all given data and fit one HMM per class."""
    scaler = Standardizer.fit(sequences)
    per_class = {}
    for s, y in zip(sequences, labels):
        per_class.setdefault(y, []).append(scaler.transform(s))
    models = {}
    for y, seqs in per_class.items():
        k = n_states[y] if isinstance(n_states, dict) else n_states
        models[y] = hmm_fit(seqs, k, topology)
    return scaler, models


@dataclass
class CvReport:
    classes: list
    folds: int
    fold_accuracy: list
    accuracy: float
    macro_f1: float
    confusion: np.ndarray
    n_states: object = None
    topology: str = LEFT_TO_RIGHT
    seed: int = 0

    def to_dict(self) -> dict:
        return {"classes": [str(c) for c in self.classes], "folds": self.folds,
                "fold_accuracy": [round(a, 12) for a in self.fold_accuracy],
                "accuracy": round(self.accuracy, 12), "macro_f1": round(self.macro_f1, 12),
                "confusion": self.confusion.tolist(), "n_states": self.n_states,
                "topology": self.topology, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def csv_row(self, vocabulary: str, sensors) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["vocabulary", "n_classes", "sensors", "accuracy", "f1"])
        w.writerow([vocabulary, len(self.classes), " ".join(sensors),
                    f"{self.accuracy:.4f}", f"{self.macro_f1:.4f}"])
        return out.getvalue()


def cross_validate(sequences, labels, n_states, topology: str = LEFT_TO_RIGHT,
                   folds: int = 10, seed: int = 0) -> CvReport:
    """Stratified k-fold evaluation of per-class HMM classifiers.

    Standardisation statistics come from each training fold only.
    """
    seqs = [_as_seq(s) for s in sequences]
    labels = list(labels)
    if len(seqs) != len(labels):
        raise DimensionError("sequences and labels differ in length")
    classes = sorted(set(labels))
    counts = {c: labels.count(c) for c in classes}
    smallest = min(counts.values()) if counts else 0
    if smallest < 2:
        raise InsufficientDataError(f"every class needs at least 2 repetitions: {counts}")
    if smallest < folds:
        log.warning("reducing folds from %d to %d (smallest class has %d repetitions)",
                    folds, smallest, smallest)
        folds = smallest
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    y_true, y_pred, fold_acc = [], [], []
    dummy = np.zeros(len(labels))
    for train, test in skf.split(dummy, labels):
        scaler, models = train_classifier([seqs[i] for i in train],
                                          [labels[i] for i in train], n_states, topology)
        hits = 0
        for i in test:
            guess = classify(models, scaler.transform(seqs[i]))
            y_true.append(labels[i])
            y_pred.append(guess)
            hits += guess == labels[i]
        fold_acc.append(hits / len(test))
    acc = float(np.mean(np.array(y_true, dtype=object) == np.array(y_pred, dtype=object)))
    f1 = float(f1_score(y_true, y_pred, labels=classes, average="macro", zero_division=0))
    cm = confusion_matrix(y_true, y_pred, labels=classes)
    return CvReport(classes, folds, fold_acc, acc, f1, cm,
                    n_states if not isinstance(n_states, dict) else dict(n_states),
                    topology, seed)
