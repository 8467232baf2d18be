"""Regressor structure of the Gesture Operational Model.

Each motion descriptor (sensor, axis) gets one second-order equation. Its
exogenous regressors are grouped by assumption:

* H2  the other two axes of the same sensor,
* H3  the same axis of the contralateral mirror sensor,
* H4s the same axis of sensors adjacent in the kinematic chain,
* H4n the same axis of the remaining sensors of that chain.

The own two lags (H1) are implicit and never listed as regressors.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..bvh import AXES, DescriptorId, resolve_sensor
from ..errors import ChainError, UnknownDescriptorError, UnknownSensorError


class AssumptionTag(str, enum.Enum):
    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    H4S = "H4s"
    H4N = "H4n"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Limb:
    """A serial chain of sensors.

    ``anchor`` names a sensor of another limb the chain hangs from (the
    upper spine for arms, the hips for legs). The anchor acts as a mediator
    for this limb's equations but does not receive regressors from it.
    """

    name: str
    chain: tuple
    anchor: str | None = None


@dataclass(frozen=True)
class ChainSpec:
    limbs: tuple
    mirrors: dict = field(default_factory=dict)

    def limb_of(self, sensor: str) -> Limb:
        for limb in self.limbs:
            if sensor in limb.chain:
                return limb
        raise ChainError(f"sensor {sensor!r} belongs to no limb of the chain spec")

    def mirror_of(self, sensor: str):
        if sensor in self.mirrors:
            return self.mirrors[sensor]
        for a, b in self.mirrors.items():
            if b == sensor:
                return a
        return None

    def to_dict(self) -> dict:
        return {"limbs": [{"name": l.name, "chain": list(l.chain), "anchor": l.anchor}
                          for l in self.limbs],
                "mirrors": dict(self.mirrors)}

    @classmethod
    def from_dict(cls, doc: dict) -> "ChainSpec":
        return cls(tuple(Limb(l["name"], tuple(l["chain"]), l.get("anchor"))
                         for l in doc["limbs"]),
                   dict(doc.get("mirrors", {})))


DEFAULT_SENSORS = ("H", "SP1", "SP2", "SP3", "N", "HE",
                   "RSH1", "RSH2", "RA", "RFA",
                   "LSH1", "LSH2", "LA", "LFA",
                   "RUL", "RL", "LUL", "LL")

DEFAULT_CHAINS = ChainSpec(
    limbs=(
        Limb("spine_head", ("H", "SP1", "SP2", "SP3", "N", "HE")),
        Limb("right_arm", ("RSH1", "RSH2", "RA", "RFA"), anchor="SP3"),
        Limb("left_arm", ("LSH1", "LSH2", "LA", "LFA"), anchor="SP3"),
        Limb("right_leg", ("RUL", "RL"), anchor="H"),
        Limb("left_leg", ("LUL", "LL"), anchor="H"),
    ),
    mirrors={"RSH1": "LSH1", "RSH2": "LSH2", "RA": "LA", "RFA": "LFA",
             "RUL": "LUL", "RL": "LL"},
)


@dataclass(frozen=True)
class GomTopology:
    descriptors: tuple
    regressors: dict
    sensor_set: tuple = ()
    chains: ChainSpec | None = None

    def __post_init__(self):
        known = set(self.descriptors)
        if set(self.regressors) != known:
            raise UnknownDescriptorError("regressor map keys must equal the descriptor list")
        for d, regs in self.regressors.items():
            for r, tag in regs:
                if r == d:
                    raise ValueError(f"{d} lists itself as a regressor")
                if r not in known:
                    raise UnknownDescriptorError(f"regressor {r} of {d} is not a topology descriptor")
                if tag == AssumptionTag.H1:
                    raise ValueError("H1 terms are implicit and cannot be listed")

    def index(self, desc: DescriptorId) -> int:
        return self.descriptors.index(desc)

    def edges(self):
        """``(target, regressor, tag)`` triples in descriptor order."""
        return [(d, r, t) for d in self.descriptors for r, t in self.regressors[d]]

    @property
    def width(self) -> int:
        return max((len(r) for r in self.regressors.values()), default=0)


def build_topology(skeleton=None, sensor_set=DEFAULT_SENSORS, chains: ChainSpec = DEFAULT_CHAINS,
                   aliases=None) -> GomTopology:
    """Derive the per-equation regressor lists for ``sensor_set``.

    When ``skeleton`` is given every sensor must resolve to one of its joints.
    """
    sensors = tuple(dict.fromkeys(sensor_set))
    if skeleton is not None:
        for s in sensors:
            try:
                resolve_sensor(skeleton, s, aliases)
            except UnknownDescriptorError:
                raise UnknownSensorError(f"sensor {s!r} not found in skeleton") from None
    present = set(sensors)
    limbs = {s: chains.limb_of(s) for s in sensors}

    descriptors = tuple(DescriptorId(s, a) for s in sensors for a in AXES)
    regressors = {}
    for s in sensors:
        limb = limbs[s]
        chain = [c for c in limb.chain if c in present]
        if limb.anchor is not None and limb.anchor in present and limb.anchor not in chain:
            chain = [limb.anchor] + chain
        pos = chain.index(s)
        adjacent = {chain[i] for i in (pos - 1, pos + 1) if 0 <= i < len(chain)}
        mirror = chains.mirror_of(s)
        for a in AXES:
            regs = [(DescriptorId(s, b), AssumptionTag.H2) for b in AXES if b != a]
            if mirror is not None and mirror in present:
                regs.append((DescriptorId(mirror, a), AssumptionTag.H3))
            for other in chain:
                if other == s:
                    continue
                tag = AssumptionTag.H4S if other in adjacent else AssumptionTag.H4N
                regs.append((DescriptorId(other, a), tag))
            regressors[DescriptorId(s, a)] = tuple(regs)
    return GomTopology(descriptors, regressors, sensors, chains)
