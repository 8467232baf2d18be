"""Biovision Hierarchy (BVH) reading and writing.

A BVH document has a HIERARCHY section describing the joint tree (offsets
and channel lists) followed by a MOTION section with one row of channel
values per frame. Rotation values are kept exactly as read; no angle
normalisation happens here.
"""
from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (BindingError, BvhSyntaxError, EmptyMotionError,
                     StructureError, UnknownDescriptorError)

CHANNEL_NAMES = ("Xposition", "Yposition", "Zposition",
                 "Xrotation", "Yrotation", "Zrotation")
AXES = ("X", "Y", "Z")
END_SITE = "End Site"

# Sensor labels used in the GOM literature mapped to candidate joint names.
# The first candidate present in a skeleton wins; a joint's own name is
# always accepted as a label too.
DEFAULT_JOINT_ALIASES = {
    "H": ("Hips", "hip", "pelvis"),
    "SP1": ("Spine", "Spine1", "spine_01"),
    "SP2": ("Spine1", "Spine2", "spine_02"),
    "SP3": ("Spine2", "Spine3", "spine_03"),
    "N": ("Neck", "Neck1", "neck_01"),
    "HE": ("Head", "head"),
    "RSH1": ("RightShoulder", "RightCollar", "RightShoulder1", "clavicle_r"),
    "RSH2": ("RightShoulder2", "RightShoulderBlade", "RightClavicle"),
    "RA": ("RightArm", "RightUpArm", "upperarm_r"),
    "RFA": ("RightForeArm", "RightLowArm", "lowerarm_r"),
    "LSH1": ("LeftShoulder", "LeftCollar", "LeftShoulder1", "clavicle_l"),
    "LSH2": ("LeftShoulder2", "LeftShoulderBlade", "LeftClavicle"),
    "LA": ("LeftArm", "LeftUpArm", "upperarm_l"),
    "LFA": ("LeftForeArm", "LeftLowArm", "lowerarm_l"),
    "RUL": ("RightUpLeg", "RightThigh", "RightUpperLeg", "thigh_r"),
    "RL": ("RightLeg", "RightShin", "RightLowerLeg", "calf_r"),
    "LUL": ("LeftUpLeg", "LeftThigh", "LeftUpperLeg", "thigh_l"),
    "LL": ("LeftLeg", "LeftShin", "LeftLowerLeg", "calf_l"),
}


@dataclass(frozen=True)
class JointNode:
    name: str
    offset: tuple
    channels: tuple
    parent: int | None
    children: tuple = ()

    @property
    def is_end_site(self) -> bool:
        return self.name == END_SITE


@dataclass(frozen=True)
class Skeleton:
    joints: tuple
    root_index: int = 0

    def __post_init__(self):
        roots = [i for i, j in enumerate(self.joints) if j.parent is None]
        if len(roots) != 1:
            raise StructureError(f"skeleton must have exactly one root, found {len(roots)}")
        if roots[0] != self.root_index:
            raise StructureError("root_index does not point at the parentless joint")
        seen = set()
        stack = [self.root_index]
        while stack:
            i = stack.pop()
            if i in seen:
                raise StructureError("joint hierarchy contains a cycle")
            seen.add(i)
            for c in self.joints[i].children:
                if self.joints[c].parent != i:
                    raise StructureError(f"joint {c} child/parent links disagree")
                stack.append(c)
        if len(seen) != len(self.joints):
            raise StructureError("joint hierarchy is not connected")
        for j in self.joints:
            bad = [c for c in j.channels if c not in CHANNEL_NAMES]
            if bad:
                raise StructureError(f"joint {j.name!r} has unknown channels {bad}")
            if len(set(j.channels)) != len(j.channels):
                raise StructureError(f"joint {j.name!r} repeats a channel")
            if j.is_end_site and j.channels:
                raise StructureError("End Site nodes cannot carry channels")

    @property
    def n_channels(self) -> int:
        return sum(len(j.channels) for j in self.joints)

    def channel_index(self):
        """List of ``(joint name, channel label)`` in column order."""
        return [(j.name, c) for j in self.joints for c in j.channels]

    def joint_names(self):
        return [j.name for j in self.joints if not j.is_end_site]

    def find_joint(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name and not j.is_end_site:
                return i
        raise UnknownDescriptorError(f"no joint named {name!r}")

    def column(self, joint: str, channel: str) -> int:
        col = 0
        for j in self.joints:
            if j.name == joint and not j.is_end_site:
                if channel not in j.channels:
                    raise UnknownDescriptorError(f"joint {joint!r} has no {channel} channel")
                return col + j.channels.index(channel)
            col += len(j.channels)
        raise UnknownDescriptorError(f"no joint named {joint!r}")


@dataclass(frozen=True)
class MotionClip:
    skeleton: Skeleton
    frame_time: float
    frames: np.ndarray
    name: str = ""

    def __post_init__(self):
        frames = np.array(self.frames, dtype=float, copy=True)
        if frames.ndim != 2:
            raise StructureError("frames must be a T x C matrix")
        if frames.shape[0] < 1:
            raise EmptyMotionError("clip has no frames")
        if frames.shape[1] != self.skeleton.n_channels:
            raise BindingError(f"clip has {frames.shape[1]} columns, skeleton declares "
                               f"{self.skeleton.n_channels} channels")
        if not self.frame_time > 0:
            raise StructureError("frame_time must be positive")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.frame_time

    def with_frames(self, frames, name=None) -> "MotionClip":
        return MotionClip(self.skeleton, self.frame_time, frames,
                          self.name if name is None else name)


@dataclass(frozen=True, order=True)
class DescriptorId:
    """One rotation channel of one sensor, e.g. ``DescriptorId("RA", "Y")``."""

    sensor: str
    axis: str

    def __post_init__(self):
        axis = self.axis.upper()
        if axis not in AXES:
            raise UnknownDescriptorError(f"axis must be one of X, Y, Z, got {self.axis!r}")
        object.__setattr__(self, "axis", axis)

    def __str__(self):
        return f"{self.sensor}.{self.axis}"

    @classmethod
    def parse(cls, text: str) -> "DescriptorId":
        sensor, sep, axis = text.rpartition(".")
        if not sep:
            sensor, axis = text[:-1], text[-1:]
        return cls(sensor, axis)


def resolve_sensor(skeleton: Skeleton, sensor: str, aliases=None) -> str:
    """Return the joint name that carries ``sensor`` in ``skeleton``."""
    names = set(skeleton.joint_names())
    aliases = DEFAULT_JOINT_ALIASES if aliases is None else aliases
    for cand in aliases.get(sensor, ()):
        if cand in names:
            return cand
    if sensor in names:
        return sensor
    raise UnknownDescriptorError(f"sensor {sensor!r} does not resolve to a joint")


def descriptor_column(skeleton: Skeleton, desc: DescriptorId, aliases=None) -> int:
    joint = resolve_sensor(skeleton, desc.sensor, aliases)
    return skeleton.column(joint, f"{desc.axis}rotation")


def extract_descriptor(clip: MotionClip, desc: DescriptorId, aliases=None) -> np.ndarray:
    """Return the rotation series (degrees) of one sensor axis."""
    return clip.frames[:, descriptor_column(clip.skeleton, desc, aliases)].copy()


def descriptor_matrix(clip: MotionClip, descriptors: Sequence[DescriptorId],
                      aliases=None) -> np.ndarray:
    cols = [descriptor_column(clip.skeleton, d, aliases) for d in descriptors]
    return clip.frames[:, cols].copy()


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\S+")


class _Tokens:
    def __init__(self, lines):
        self._toks = [(m.group(), n) for n, line in lines
                      for m in _TOKEN.finditer(line)]
        self.pos = 0

    def peek(self):
        return self._toks[self.pos][0] if self.pos < len(self._toks) else None

    def line(self):
        if self.pos < len(self._toks):
            return self._toks[self.pos][1]
        return self._toks[-1][1] if self._toks else 1

    def next(self, what="token"):
        if self.pos >= len(self._toks):
            raise BvhSyntaxError(f"unexpected end of hierarchy, expected {what}", self.line())
        tok = self._toks[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, word):
        line = self.line()
        tok = self.next(repr(word))
        if tok != word:
            raise BvhSyntaxError(f"expected {word!r}, found {tok!r}", line)

    def number(self, what):
        line = self.line()
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise BvhSyntaxError(f"expected {what}, found {tok!r}", line) from None


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8", errors="replace")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data


def _parse_joint(toks: _Tokens, joints: list, parent):
    name_line = toks.line()
    name = toks.next("joint name")
    if name in ("{", "}"):
        raise BvhSyntaxError("joint name missing", name_line)
    toks.expect("{")
    toks.expect("OFFSET")
    offset = tuple(toks.number("offset value") for _ in range(3))
    channels = ()
    if toks.peek() == "CHANNELS":
        toks.next()
        line = toks.line()
        tok = toks.next("channel count")
        try:
            count = int(tok)
        except ValueError:
            raise BvhSyntaxError(f"channel count must be an integer, found {tok!r}", line) from None
        channels = tuple(toks.next("channel name") for _ in range(count))
        for c in channels:
            if c not in CHANNEL_NAMES:
                raise BvhSyntaxError(f"unknown channel {c!r}", line)
    index = len(joints)
    joints.append([name, offset, channels, parent, []])
    while True:
        line = toks.line()
        tok = toks.next("'}'")
        if tok == "}":
            break
        if tok == "JOINT":
            child = _parse_joint(toks, joints, index)
        elif tok == "End":
            toks.expect("Site")
            toks.expect("{")
            toks.expect("OFFSET")
            off = tuple(toks.number("offset value") for _ in range(3))
            toks.expect("}")
            child = len(joints)
            joints.append([END_SITE, off, (), index, []])
        elif tok == "ROOT":
            raise StructureError(f"line {line}: nested ROOT; a skeleton has exactly one root")
        else:
            raise BvhSyntaxError(f"unexpected token {tok!r} inside joint {name!r}", line)
        joints[index][4].append(child)
    return index


def parse_bvh(source, name: str = "") -> tuple[Skeleton, MotionClip]:
    """Parse a BVH document given as text, bytes or a readable stream."""
    text = _read_text(source)
    lines = text.splitlines()
    motion_at = None
    for n, line in enumerate(lines):
        if line.strip().upper().startswith("MOTION"):
            motion_at = n
            break
    if motion_at is None:
        raise BvhSyntaxError("missing MOTION section", len(lines) or 1)

    toks = _Tokens((n + 1, line) for n, line in enumerate(lines[:motion_at]))
    toks.expect("HIERARCHY")
    joints: list = []
    line = toks.line()
    if toks.next("ROOT") != "ROOT":
        raise BvhSyntaxError("expected ROOT", line)
    _parse_joint(toks, joints, None)
    if toks.peek() == "ROOT":
        raise StructureError(f"line {toks.line()}: multiple ROOT joints")
    if toks.peek() is not None:
        raise BvhSyntaxError(f"unexpected token {toks.peek()!r} after hierarchy", toks.line())
    skeleton = Skeleton(tuple(JointNode(nm, off, ch, par, tuple(kids))
                              for nm, off, ch, par, kids in joints), 0)

    # MOTION header
    body = iter(enumerate(lines[motion_at + 1:], start=motion_at + 2))
    header = {}
    for n, line in body:
        s = line.strip()
        if not s:
            continue
        key, sep, val = s.partition(":")
        key = key.strip().lower()
        if not sep or key not in ("frames", "frame time"):
            raise BvhSyntaxError(f"expected 'Frames:' / 'Frame Time:' header, found {s!r}", n)
        try:
            header[key] = (int(val) if key == "frames" else float(val))
        except ValueError:
            raise BvhSyntaxError(f"bad value in {s!r}", n) from None
        if len(header) == 2:
            break
    if "frames" not in header or "frame time" not in header:
        raise BvhSyntaxError("incomplete MOTION header", len(lines))
    n_frames = header["frames"]
    if n_frames <= 0:
        raise EmptyMotionError("MOTION section declares zero frames")
    if not header["frame time"] > 0:
        raise StructureError("Frame Time must be positive")

    n_ch = skeleton.n_channels
    rows = []
    for n, line in body:
        parts = line.split()
        if not parts:
            continue
        if len(rows) >= n_frames:
            raise StructureError(f"line {n}: more frame rows than the declared {n_frames}")
        if len(parts) != n_ch:
            raise StructureError(f"line {n}: frame {len(rows)} has {len(parts)} values, "
                                 f"expected {n_ch}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise BvhSyntaxError(f"non-numeric value in frame {len(rows)}", n) from None
    if len(rows) != n_frames:
        raise StructureError(f"declared {n_frames} frames but found {len(rows)}")
    frames = np.array(rows, dtype=float).reshape(n_frames, n_ch)
    return skeleton, MotionClip(skeleton, header["frame time"], frames, name)


def load_bvh(path) -> tuple[Skeleton, MotionClip]:
    with open(path, "rb") as fh:
        return parse_bvh(fh, name=os.path.splitext(os.path.basename(str(path)))[0])


# --------------------------------------------------------------------------
# writing

def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def write_bvh(skeleton: Skeleton, clip: MotionClip) -> str:
    """Serialise ``clip`` as BVH text (6 decimals, one frame per line)."""
    if clip.frames.shape[1] != skeleton.n_channels:
        raise BindingError(f"clip has {clip.frames.shape[1]} columns but skeleton declares "
                           f"{skeleton.n_channels} channels")
    out = io.StringIO()
    out.write("HIERARCHY\n")

    def emit(i, depth):
        j = skeleton.joints[i]
        pad = "\t" * depth
        off = " ".join(_fmt(v) for v in j.offset)
        if j.is_end_site:
            out.write(f"{pad}End Site\n{pad}{{\n{pad}\tOFFSET {off}\n{pad}}}\n")
            return
        kind = "ROOT" if j.parent is None else "JOINT"
        out.write(f"{pad}{kind} {j.name}\n{pad}{{\n{pad}\tOFFSET {off}\n")
        if j.channels:
            out.write(f"{pad}\tCHANNELS {len(j.channels)} {' '.join(j.channels)}\n")
        for c in j.children:
            emit(c, depth + 1)
        out.write(f"{pad}}}\n")

    emit(skeleton.root_index, 0)
    out.write("MOTION\n")
    out.write(f"Frames: {clip.n_frames}\n")
    out.write(f"Frame Time: {clip.frame_time:.8f}\n")
    frames = np.where(clip.frames == 0, 0.0, clip.frames)  # drop negative zeros
    np.savetxt(out, frames, fmt="%.6f", delimiter=" ")
    return out.getvalue().replace("-0.000000", "0.000000")


def save_bvh(path, skeleton: Skeleton, clip: MotionClip) -> None:
    from .ioutil import atomic_write_text
    atomic_write_text(path, write_bvh(skeleton, clip))


def make_skeleton(spec: Iterable, root_channels=("Xposition", "Yposition", "Zposition",
                                                  "Zrotation", "Xrotation", "Yrotation"),
                  channels=("Zrotation", "Xrotation", "Yrotation")) -> Skeleton:
    """Build a skeleton from ``(name, parent_name)`` pairs in depth-first order.

    Leaves get an End Site child. Offsets are unit vectors along Y.
    """
    spec = list(spec)
    index = {}
    raw = []
    for name, parent in spec:
        p = None if parent is None else index[parent]
        index[name] = len(raw)
        raw.append([name, (0.0, 1.0, 0.0), tuple(root_channels if p is None else channels), p, []])
        if p is not None:
            raw[p][4].append(index[name])
    # End Sites appended after the fact keep depth-first order only if we
    # rebuild; do that explicitly.
    children = {i: list(r[4]) for i, r in enumerate(raw)}
    ordered = []

    def visit(i, parent):
        me = len(ordered)
        ordered.append([raw[i][0], raw[i][1], raw[i][2], parent, []])
        if not children[i]:
            end = len(ordered)
            ordered.append([END_SITE, (0.0, 1.0, 0.0), (), me, []])
            ordered[me][4].append(end)
        for c in children[i]:
            ordered[me][4].append(visit(c, me))
        return me

    roots = [i for i, r in enumerate(raw) if r[3] is None]
    if len(roots) != 1:
        raise StructureError("skeleton spec must have exactly one root")
    visit(roots[0], None)
    return Skeleton(tuple(JointNode(n, o, c, p, tuple(k)) for n, o, c, p, k in ordered), 0)
