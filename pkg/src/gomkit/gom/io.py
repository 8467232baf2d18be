"""Versioned JSON persistence for fitted GOM systems."""
from __future__ import annotations

import json

from ..bvh import DescriptorId
from ..ioutil import sig12
from .model import GomModel, GomSystem
from .topology import AssumptionTag, ChainSpec, GomTopology

FORMAT_VERSION = 1


def system_to_dict(system: GomSystem) -> dict:
    topo = system.topology
    models = {}
    for d in topo.descriptors:
        m = system.models[d]
        models[str(d)] = {
            "alpha": [sig12(m.alpha[0]), sig12(m.alpha[1])],
            "betas": {str(r): sig12(b) for r, b in m.betas.items()},
            "obs_noise_var": sig12(m.obs_noise_var),
            "p_values": {k: sig12(v) for k, v in m.p_values.items()},
            "std_errors": {k: (sig12(v) if v != float("inf") else None)
                           for k, v in m.std_errors.items()},
            "log_likelihood": sig12(m.log_likelihood),
            "n_obs": m.n_obs,
            "degenerate": m.degenerate,
        }
    meta = {k: (sig12(v) if isinstance(v, float) else v) for k, v in system.metadata.items()}
    return {
        "version": FORMAT_VERSION,
        "sensor_set": list(topo.sensor_set),
        "descriptors": [str(d) for d in topo.descriptors],
        "frame_time": meta.pop("frame_time", None),
        "metadata": meta,
        "models": models,
        "topology": [[str(d), str(r), t.value] for d, r, t in topo.edges()],
        "chains": topo.chains.to_dict() if topo.chains is not None else None,
    }


def system_from_dict(doc: dict) -> GomSystem:
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported GOM document version {doc.get('version')!r}")
    descs = tuple(DescriptorId.parse(s) for s in doc["descriptors"])
    regs = {d: [] for d in descs}
    for target, reg, tag in doc["topology"]:
        regs[DescriptorId.parse(target)].append((DescriptorId.parse(reg), AssumptionTag(tag)))
    chains = ChainSpec.from_dict(doc["chains"]) if doc.get("chains") else None
    topo = GomTopology(descs, {d: tuple(v) for d, v in regs.items()},
                       tuple(doc.get("sensor_set", ())), chains)
    models = {}
    for d in descs:
        m = doc["models"][str(d)]
        models[d] = GomModel(
            descriptor=d,
            alpha=tuple(m["alpha"]),
            betas={DescriptorId.parse(k): v for k, v in m["betas"].items()},
            obs_noise_var=m["obs_noise_var"],
            p_values=dict(m["p_values"]),
            log_likelihood=m["log_likelihood"],
            std_errors={k: (float("inf") if v is None else v)
                        for k, v in m.get("std_errors", {}).items()},
            n_obs=m.get("n_obs", 0),
            degenerate=m.get("degenerate", False),
        )
        # keep beta order aligned with the topology edges
        models[d].betas = {r: models[d].betas[r] for r, _ in topo.regressors[d]}
    meta = dict(doc.get("metadata", {}))
    if doc.get("frame_time") is not None:
        meta["frame_time"] = doc["frame_time"]
    return GomSystem(topo, models, meta)


def dumps(system: GomSystem) -> str:
    return json.dumps(system_to_dict(system), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> GomSystem:
    return system_from_dict(json.loads(text))
