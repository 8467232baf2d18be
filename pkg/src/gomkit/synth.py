"""Synthetic BVH recordings for demos and tests.

The skeleton uses joint names that the default sensor aliases resolve, so
every default GOM sensor is present.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .bvh import AXES, MotionClip, Skeleton, descriptor_column, make_skeleton, save_bvh
from .gom.topology import DEFAULT_SENSORS
from .bvh import DescriptorId

BODY = (
    ("Hips", None), ("Spine", "Hips"), ("Spine1", "Spine"), ("Spine2", "Spine1"),
    ("Neck", "Spine2"), ("Head", "Neck"),
    ("RightShoulder", "Spine2"), ("RightShoulder2", "RightShoulder"),
    ("RightArm", "RightShoulder2"), ("RightForeArm", "RightArm"), ("RightHand", "RightForeArm"),
    ("LeftShoulder", "Spine2"), ("LeftShoulder2", "LeftShoulder"),
    ("LeftArm", "LeftShoulder2"), ("LeftForeArm", "LeftArm"), ("LeftHand", "LeftForeArm"),
    ("RightUpLeg", "Hips"), ("RightLeg", "RightUpLeg"), ("RightFoot", "RightLeg"),
    ("LeftUpLeg", "Hips"), ("LeftLeg", "LeftUpLeg"), ("LeftFoot", "LeftLeg"),
)


def body_skeleton() -> Skeleton:
    return make_skeleton(BODY)


def gesture_clip(skeleton: Skeleton, params: dict, n_frames: int, rng, frame_time=1 / 90,
                 warp=1.0, jitter=0.0, noise=0.0, name="") -> MotionClip:
    """Each descriptor follows ``offset + amp * sin(2 pi f t + phase)``."""
    t = np.arange(n_frames) * frame_time * warp
    frames = np.zeros((n_frames, skeleton.n_channels))
    for desc, (offset, amp, freq, phase) in params.items():
        a = amp * (1.0 + jitter * rng.standard_normal())
        x = offset + a * np.sin(2 * np.pi * freq * t + phase)
        if noise:
            x = x + noise * rng.standard_normal(n_frames)
        frames[:, descriptor_column(skeleton, desc)] = np.clip(x, -179.0, 179.0)
    return MotionClip(skeleton, frame_time, frames, name)


def random_gesture_params(rng, sensors=DEFAULT_SENSORS, offset: float = 0.0) -> dict:
    """Per-descriptor ``(offset, amplitude, frequency, phase)``.

    With zero offsets every series is an exact solution of a GOM equation
    (alpha1 = 2 cos w, alpha2 = -1, no exogenous terms), which keeps
    synthetic round trips self-consistent.
    """
    return {DescriptorId(s, a): (rng.uniform(-offset, offset), rng.uniform(5, 30),
                                 rng.uniform(0.3, 1.2), rng.uniform(0, 2 * np.pi))
            for s in sensors for a in AXES}


def write_dataset(root, dataset: str = "SYN", n_classes: int = 3, repetitions: int = 8,
                  seconds: float = 3.0, noise: float = 0.0, seed: int = 0,
                  warp: float = 0.05, jitter: float = 0.03) -> dict:
    """Write ``root/<dataset>/<LABEL>_<rep>.bvh`` files; return label -> paths.

    Repetitions differ by time warp and amplitude jitter. ``noise`` adds
    white noise per frame; fitted models of noisy recordings can be
    unstable in closed-loop simulation. ``noise=warp=jitter=0`` gives
    identical repetitions that a fitted GOM reproduces exactly.
    """
    rng = np.random.default_rng(seed)
    skel = body_skeleton()
    root = Path(root) / dataset
    n_frames = int(round(seconds * 90))
    out = {}
    for c in range(1, n_classes + 1):
        label = f"{dataset}_{c}"
        params = random_gesture_params(rng)
        for r in range(repetitions):
            clip = gesture_clip(skel, params, n_frames, rng, warp=1.0 + rng.uniform(-warp, warp),
                                jitter=jitter, noise=noise, name=f"{label}_{r:02d}")
            path = root / f"{label}_{r:02d}.bvh"
            save_bvh(path, skel, clip)
            out.setdefault(label, []).append(path)
    return out
