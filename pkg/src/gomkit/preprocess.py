"""Noise filtering, Euler-angle wrap correction and gesture segmentation."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .bvh import MotionClip
from .errors import (BoundsError, OverlapError, RangeError, SpecError,
                     TooShortError)

log = logging.getLogger(__name__)

UNWRAP_LIMIT = 250.0
WRAP_JUMP = 180.0
UNWRAP_LOG_VERSION = 1

CUTOFF_POWER_FRACTION = 0.99
CUTOFF_MIN_HZ = 1.0
CUTOFF_MAX_HZ = 20.0
WELCH_SEGMENT = 256


@dataclass(frozen=True)
class FilterSpec:
    order: int = 4
    cutoff_hz: float = 6.0
    sample_rate_hz: float = 90.0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise SpecError(f"filter order must be a positive integer, got {self.order}")
        if not (self.cutoff_hz > 0 and self.sample_rate_hz > 0):
            raise SpecError("cutoff and sample rate must be positive")
        if not self.cutoff_hz < self.sample_rate_hz / 2:
            raise SpecError(f"cutoff {self.cutoff_hz} Hz is not below Nyquist "
                            f"({self.sample_rate_hz / 2} Hz)")


def select_cutoff(series, sample_rate_hz: float) -> float:
    """Cutoff frequency holding 99% of the series' power (Welch PSD).

    The mean is removed before estimating the spectrum, and the result is
    clamped to [1, 20] Hz.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 64:
        raise TooShortError(f"need at least 64 samples to estimate a cutoff, got {x.size}")
    nper = min(WELCH_SEGMENT, len(x))
    freqs, psd = signal.welch(x, fs=sample_rate_hz, window="hann", nperseg=nper,
                              noverlap=nper // 2, detrend="constant")
    total = psd.sum()
    if not total > 0:
        return CUTOFF_MIN_HZ
    cum = np.cumsum(psd) / total
    f = float(freqs[np.searchsorted(cum, CUTOFF_POWER_FRACTION)])
    return float(min(max(f, CUTOFF_MIN_HZ), CUTOFF_MAX_HZ))


def butterworth_lowpass(series, spec: FilterSpec) -> np.ndarray:
    """Zero-phase (forward-backward) Butterworth low-pass filter."""
    x = np.asarray(series, dtype=float)
    if len(x) <= 3 * spec.order:
        raise SpecError(f"series of length {len(x)} is too short for an order-{spec.order} "
                        f"filter (need more than {3 * spec.order})")
    sos = signal.butter(spec.order, spec.cutoff_hz, btype="low", fs=spec.sample_rate_hz,
                        output="sos")
    padlen = min(3 * (2 * len(sos) + 1), len(x) - 1)
    return signal.sosfiltfilt(sos, x, padlen=padlen)


# --------------------------------------------------------------------------
# wrap correction

@dataclass
class UnwrapLog:
    """Offsets added by :func:`unwrap_discontinuities`.

    ``entries`` holds ``(frame, delta)`` pairs: from ``frame`` on, ``delta``
    degrees (a multiple of 360) were added on top of earlier offsets.
    ``residuals`` holds ``(frame, r)`` for the few frames where removing the
    offset in floating point does not land exactly on the original value.
    """

    channel: str = ""
    entries: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def offsets(self, n: int) -> np.ndarray:
        off = np.zeros(n)
        for frame, delta in self.entries:
            off[frame:] += delta
        return off

    def invert(self, transformed) -> np.ndarray:
        y = np.asarray(transformed, dtype=float)
        x = y - self.offsets(len(y))
        for frame, r in self.residuals:
            x[frame] += r
        return x

    def to_json(self) -> str:
        return json.dumps({"version": UNWRAP_LOG_VERSION, "channel": self.channel,
                           "entries": [[int(f), float(d)] for f, d in self.entries],
                           "residuals": [[int(f), float(r)] for f, r in self.residuals]},
                          indent=2)

    @classmethod
    def from_json(cls, text: str) -> "UnwrapLog":
        doc = json.loads(text)
        if doc.get("version") != UNWRAP_LOG_VERSION:
            raise ValueError(f"unsupported unwrap log version {doc.get('version')!r}")
        return cls(doc.get("channel", ""),
                   [(int(f), float(d)) for f, d in doc["entries"]],
                   [(int(f), float(r)) for f, r in doc.get("residuals", [])])


def unwrap_discontinuities(series, channel: str = "") -> tuple[np.ndarray, UnwrapLog]:
    """Remove +-360 deg wrap jumps from an Euler angle series.

    A jump larger than 180 deg between consecutive frames is treated as a
    wrap. Output must stay within +-250 deg, otherwise RangeError.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise RangeError("expected a 1-D angle series")
    if x.size and (np.nanmax(np.abs(x)) > 180.0 or not np.all(np.isfinite(x))):
        raise RangeError("input angles must be finite and lie in [-180, 180]")
    ulog = UnwrapLog(channel)
    if x.size < 2:
        return x.copy(), ulog
    d = np.diff(x)
    step = np.where(d > WRAP_JUMP, -360.0, np.where(d < -WRAP_JUMP, 360.0, 0.0))
    jumps = np.flatnonzero(step)
    if jumps.size == 0:
        return x.copy(), ulog
    ulog.entries = [(int(i + 1), float(step[i])) for i in jumps]
    off = np.concatenate(([0.0], np.cumsum(step)))
    y = x + off
    worst = np.max(np.abs(y))
    if worst > UNWRAP_LIMIT:
        frame = int(np.argmax(np.abs(y)))
        raise RangeError(f"unwrapped value {y[frame]:.3f} at frame {frame} leaves "
                         f"[-{UNWRAP_LIMIT:g}, {UNWRAP_LIMIT:g}]")
    back = y - off
    miss = np.flatnonzero(back != x)
    ulog.residuals = [(int(i), float(x[i] - back[i])) for i in miss]
    return y, ulog


# --------------------------------------------------------------------------
# segmentation

@dataclass(frozen=True)
class SegmentAnnotation:
    label: str
    start_frame: int
    end_frame: int


def read_annotations(text: str) -> list[SegmentAnnotation]:
    rows = csv.DictReader(io.StringIO(text))
    missing = {"label", "start_frame", "end_frame"} - set(rows.fieldnames or ())
    if missing:
        raise BoundsError(f"annotation CSV lacks columns {sorted(missing)}")
    return [SegmentAnnotation(r["label"], int(r["start_frame"]), int(r["end_frame"]))
            for r in rows]


def write_annotations(annotations) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["label", "start_frame", "end_frame"])
    for a in annotations:
        w.writerow([a.label, a.start_frame, a.end_frame])
    return out.getvalue()


def segment(clip: MotionClip, annotations) -> list[MotionClip]:
    """Cut ``clip`` into labelled sub-clips, in annotation order."""
    T = clip.n_frames
    for a in annotations:
        if not (0 <= a.start_frame < a.end_frame <= T):
            raise BoundsError(f"segment {a.label!r} [{a.start_frame}, {a.end_frame}) "
                              f"is outside [0, {T})")
    spans = sorted(annotations, key=lambda a: a.start_frame)
    for prev, cur in zip(spans, spans[1:]):
        if cur.start_frame < prev.end_frame:
            raise OverlapError(f"segments {prev.label!r} and {cur.label!r} overlap")
    return [clip.with_frames(clip.frames[a.start_frame:a.end_frame], name=a.label)
            for a in annotations]


# --------------------------------------------------------------------------
# whole-clip pipeline

def preprocess_clip(clip: MotionClip, columns=None, order=("unwrap", "filter"),
                    cutoff_hz=None, filter_order: int = 4):
    """Unwrap and low-pass the given columns (default: every rotation channel).

    Returns ``(clip, logs, cutoffs)`` where ``logs`` maps column index to
    :class:`UnwrapLog` and ``cutoffs`` maps column index to the cutoff used.
    A channel that cannot be unwrapped within range is left as recorded and
    a warning is logged.
    """
    names = clip.skeleton.channel_index()
    if columns is None:
        columns = [i for i, (_, ch) in enumerate(names) if ch.endswith("rotation")]
    frames = np.array(clip.frames)
    logs, cutoffs = {}, {}
    fs = clip.sample_rate
    for col in columns:
        label = "{}.{}".format(*names[col])
        x = frames[:, col]
        for step in order:
            if step == "unwrap":
                try:
                    x, logs[col] = unwrap_discontinuities(x, label)
                except RangeError as exc:
                    log.warning("%s: %s: channel %s left wrapped: %s",
                                clip.name, "unwrap", label, exc)
            elif step == "filter":
                try:
                    fc = cutoff_hz if cutoff_hz is not None else select_cutoff(x, fs)
                    fc = min(fc, 0.45 * fs)
                    x = butterworth_lowpass(x, FilterSpec(filter_order, fc, fs))
                    cutoffs[col] = fc
                except (TooShortError, SpecError) as exc:
                    log.warning("%s: channel %s not filtered: %s", clip.name, label, exc)
            else:
                raise SpecError(f"unknown preprocessing step {step!r}")
        frames[:, col] = x
    return clip.with_frames(frames), logs, cutoffs
