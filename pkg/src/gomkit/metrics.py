"""Forecast-quality metrics between recorded and simulated motion."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .bvh import MotionClip, descriptor_matrix
from .errors import DegenerateError, GomkitError, LengthMismatchError, RepetitionError


def _pair(real, sim):
    a = np.asarray(real, dtype=float)
    b = np.asarray(sim, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatchError(f"series shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise LengthMismatchError("series must contain at least one frame")
    return a, b


def rmse(real, sim) -> float:
    a, b = _pair(real, sim)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def mae(real, sim) -> float:
    a, b = _pair(real, sim)
    return float(np.mean(np.abs(a - b)))


def theil_u1(real, sim) -> float:
    """Theil's U1: RMSE over the sum of the two root-mean-square magnitudes."""
    a, b = _pair(real, sim)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    if not scale > 0:
        raise DegenerateError("Theil U1 is undefined when both series are zero")
    a, b = a / scale, b / scale  # U1 is scale free; this avoids underflow
    den = np.sqrt(np.mean(a * a)) + np.sqrt(np.mean(b * b))
    return float(min(np.sqrt(np.mean((a - b) ** 2)) / den, 1.0))


@dataclass
class MetricReport:
    """Metrics per descriptor (averaged over repetitions) plus aggregates."""

    gesture: str = ""
    descriptors: list = field(default_factory=list)
    rmse: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mae: np.ndarray = field(default_factory=lambda: np.zeros(0))
    u1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    repetitions: int = 0
    mean_rmse: float = float("nan")
    mean_mae: float = float("nan")
    avg_u1: float = float("nan")


def descriptor_metrics(real: np.ndarray, sim: np.ndarray):
    """Column-wise ``(rmse, mae, u1)`` arrays for two T x D matrices."""
    real, sim = _pair(real, sim)
    if real.ndim == 1:
        real, sim = real[:, None], sim[:, None]
    cols = range(real.shape[1])
    return (np.array([rmse(real[:, j], sim[:, j]) for j in cols]),
            np.array([mae(real[:, j], sim[:, j]) for j in cols]),
            np.array([theil_u1(real[:, j], sim[:, j]) for j in cols]))


def aggregate(per_rep, gesture: str = "", descriptors=()) -> MetricReport:
    """Mean over descriptors within each repetition, then over repetitions."""
    report = MetricReport(gesture, list(descriptors), repetitions=len(per_rep))
    if not per_rep:
        return report
    r = np.array([p[0] for p in per_rep])
    m = np.array([p[1] for p in per_rep])
    u = np.array([p[2] for p in per_rep])
    report.rmse, report.mae, report.u1 = r.mean(axis=0), m.mean(axis=0), u.mean(axis=0)
    report.mean_rmse = float(r.mean(axis=1).mean())
    report.mean_mae = float(m.mean(axis=1).mean())
    report.avg_u1 = float(u.mean(axis=1).mean())
    return report


def evaluate(system, repetitions, gesture: str = "", aliases=None) -> MetricReport:
    """Simulate every repetition from its first two frames and score it.

    Repetitions may be MotionClips or T x D matrices in topology order.
    """
    from .gom import simulate

    descs = system.topology.descriptors
    per_rep = []
    for k, rep in enumerate(repetitions):
        rep_id = getattr(rep, "name", "") or str(k)
        try:
            real = (descriptor_matrix(rep, descs, aliases) if isinstance(rep, MotionClip)
                    else np.asarray(rep, dtype=float))
            sim = simulate(system, real[:2], len(real))
            per_rep.append(descriptor_metrics(real, sim))
        except GomkitError as exc:
            raise RepetitionError(rep_id, exc) from exc
    return aggregate(per_rep, gesture, [str(d) for d in descs])


CSV_HEADER = ("gesture", "repetitions", "rmse", "mae", "avg_u1")


def reports_to_csv(reports) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow([r.gesture, r.repetitions, f"{r.mean_rmse:.6f}", f"{r.mean_mae:.6f}",
                    f"{r.avg_u1:.6f}"])
    return out.getvalue()
