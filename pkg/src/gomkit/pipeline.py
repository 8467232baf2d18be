"""Stage orchestration: preprocess -> fit -> simulate/evaluate/dexterity -> recognize.

Each stage reads the artifacts of earlier stages from the output directory,
writes its own sub-directory and never touches earlier ones. Every stage
directory receives a copy of the RunConfig that produced it.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import gom
from .bvh import descriptor_matrix, load_bvh, save_bvh
from .datasets import DatasetManifest, discover, load_manifest
from .dexterity import (select_sensors, significance_counts, system_markdown,
                        vocabulary_ranking, SensorRanking)
from .errors import ConfigError, GomkitError, MissingArtifactError
from .gom.topology import DEFAULT_SENSORS, ChainSpec, DEFAULT_CHAINS, build_topology
from .ioutil import atomic_write_json, atomic_write_text
from .metrics import evaluate, reports_to_csv
from .preprocess import preprocess_clip
from .recognition import cross_validate
from .similarity import select_reference

log = logging.getLogger(__name__)

STAGES = ("preprocess", "fit", "simulate", "evaluate", "dexterity", "recognize")


@dataclass
class FilterConfig:
    order: int = 4
    cutoff_hz: float | None = None
    steps: tuple = ("unwrap", "filter")


@dataclass
class HmmConfig:
    topology: str = "left_to_right"
    n_states: int | None = None
    folds: int = 10
    seed: int = 0
    sensors: object = "all"


@dataclass
class RunConfig:
    dataset: str = "SYN"
    data_dir: str | None = None
    out_dir: str = "gomkit-out"
    sensors: tuple = DEFAULT_SENSORS
    gestures: tuple = ()
    joint_aliases: dict = field(default_factory=dict)
    chains: dict | None = None
    filter: FilterConfig = field(default_factory=FilterConfig)
    threshold: float = 0.05
    hmm: HmmConfig = field(default_factory=HmmConfig)
    plot_descriptors: int = 6
    min_repetitions: int | None = None

    def validate(self):
        if not self.sensors:
            raise ConfigError("sensor set is empty")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.filter.order < 1:
            raise ConfigError("filter order must be positive")
        bad = [s for s in self.filter.steps if s not in ("unwrap", "filter")]
        if bad:
            raise ConfigError(f"unknown preprocessing steps {bad}")
        if self.hmm.topology not in ("left_to_right", "ergodic"):
            raise ConfigError(f"unknown HMM topology {self.hmm.topology!r}")
        if self.hmm.folds < 2:
            raise ConfigError("need at least 2 folds")
        self.chain_spec()
        return self

    def chain_spec(self) -> ChainSpec:
        try:
            return ChainSpec.from_dict(self.chains) if self.chains else DEFAULT_CHAINS
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed chain spec: {exc}") from exc

    def aliases(self):
        from .bvh import DEFAULT_JOINT_ALIASES
        merged = dict(DEFAULT_JOINT_ALIASES)
        merged.update({k: tuple(v) if not isinstance(v, str) else (v,)
                       for k, v in self.joint_aliases.items()})
        return merged

    def manifest(self) -> DatasetManifest:
        try:
            return load_manifest(self.dataset)
        except ConfigError:
            return DatasetManifest(self.dataset.upper())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sensors"] = list(self.sensors)
        d["gestures"] = list(self.gestures)
        d["filter"]["steps"] = list(self.filter.steps)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        filt = FilterConfig(**{**doc.pop("filter", {})})
        filt.steps = tuple(filt.steps)
        hmm = HmmConfig(**doc.pop("hmm", {}))
        cfg = cls(filter=filt, hmm=hmm, **doc)
        cfg.sensors = tuple(cfg.sensors)
        cfg.gestures = tuple(cfg.gestures)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        text = Path(path).read_text()
        if str(path).endswith((".yaml", ".yml")):
            import yaml
            doc = yaml.safe_load(text) or {}
        else:
            doc = json.loads(text)
        return cls.from_dict(doc)


# --------------------------------------------------------------------------
# helpers

def _stage_dir(cfg: RunConfig, stage: str) -> Path:
    d = Path(cfg.out_dir) / stage
    d.mkdir(parents=True, exist_ok=True)
    atomic_write_json(d / "run_config.json", cfg.to_dict())
    return d


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"required artifact missing: {path}")
    return path


def _index(cfg) -> dict:
    idx = json.loads(_require(Path(cfg.out_dir) / "preprocess" / "index.json").read_text())
    if cfg.gestures:
        idx = {k: v for k, v in idx.items() if k in cfg.gestures}
    return idx


def _load_clips(cfg, files):
    root = Path(cfg.out_dir) / "preprocess"
    return [load_bvh(_require(root / f))[1] for f in files]


def _load_system(cfg, label):
    return gom.loads(_require(Path(cfg.out_dir) / "fit" / f"{label}.json").read_text())


def _gesture_topology(cfg, skeleton):
    return build_topology(skeleton, cfg.sensors, cfg.chain_spec(), cfg.aliases())


# --------------------------------------------------------------------------
# stages

def stage_preprocess(cfg: RunConfig) -> dict:
    if not cfg.data_dir:
        raise ConfigError("data_dir is not set (fetch the dataset or pass --data)")
    src = _require(Path(cfg.data_dir))
    out = _stage_dir(cfg, "preprocess")
    groups = discover(src, cfg.manifest(), cfg.gestures or None)
    if not groups:
        raise MissingArtifactError(f"no BVH files for {cfg.dataset} under {src}")
    index, cutoffs = {}, {}
    for label, paths in groups.items():
        for path in paths:
            skel, clip = load_bvh(path)
            clean, logs, cut = preprocess_clip(clip, order=cfg.filter.steps,
                                               cutoff_hz=cfg.filter.cutoff_hz,
                                               filter_order=cfg.filter.order)
            rel = f"{label}/{path.stem}.bvh"
            save_bvh(out / rel, skel, clean)
            names = skel.channel_index()
            atomic_write_json(out / label / f"{path.stem}.unwrap.json",
                              [json.loads(l.to_json()) for c, l in sorted(logs.items())
                               if l.entries])
            cutoffs[rel] = {"{}.{}".format(*names[c]): round(f, 6) for c, f in sorted(cut.items())}
            index.setdefault(label, []).append(rel)
    atomic_write_json(out / "cutoffs.json", cutoffs)
    atomic_write_json(out / "index.json", index)
    return {"gestures": len(index), "files": sum(map(len, index.values()))}


def stage_fit(cfg: RunConfig) -> dict:
    index = _index(cfg)
    out = _stage_dir(cfg, "fit")
    summary = {}
    for label, files in index.items():
        clips = _load_clips(cfg, files)
        topo = _gesture_topology(cfg, clips[0].skeleton)
        mats = [descriptor_matrix(c, topo.descriptors, cfg.aliases()) for c in clips]
        ref = select_reference(mats)
        system = gom.fit(clips[ref], topo, cfg.aliases(), on_singular="hold",
                         metadata={"reference_index": ref, "reference_file": files[ref],
                                   "gesture": label})
        atomic_write_text(out / f"{label}.json", gom.dumps(system))
        held = [str(d) for d, m in system.models.items() if m.degenerate]
        summary[label] = {"reference_index": ref, "reference_file": files[ref],
                          "degenerate": held}
    atomic_write_json(out / "summary.json", summary)
    return summary


def _plot(path, real, sim, names, k, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    k = min(k, real.shape[1])
    fig, axes = plt.subplots(k, 1, figsize=(8, 1.6 * k + 0.6), sharex=True, squeeze=False)
    for j in range(k):
        ax = axes[j, 0]
        ax.plot(real[:, j], label="recorded", lw=1.2)
        ax.plot(sim[:, j], label="simulated", lw=1.0, ls="--")
        ax.set_ylabel(names[j], fontsize=8)
    axes[0, 0].legend(fontsize=7, loc="upper right")
    axes[0, 0].set_title(title, fontsize=9)
    axes[-1, 0].set_xlabel("frame")
    fig.tight_layout()
    fig.savefig(path, dpi=90)
    plt.close(fig)


def stage_simulate(cfg: RunConfig) -> dict:
    index = _index(cfg)
    out = _stage_dir(cfg, "simulate")
    errors = {}
    for label, files in index.items():
        system = _load_system(cfg, label)
        names = [str(d) for d in system.topology.descriptors]
        for f, clip in zip(files, _load_clips(cfg, files)):
            real = descriptor_matrix(clip, system.topology.descriptors, cfg.aliases())
            try:
                sim = gom.simulate(system, real[:2], len(real))
            except GomkitError as exc:
                errors[f] = f"{type(exc).__name__}: {exc}"
                continue
            buf = io.StringIO()
            np.savetxt(buf, sim, fmt="%.6f", delimiter=",", header=",".join(names), comments="")
            stem = Path(f).stem
            atomic_write_text(out / label / f"{stem}.csv", buf.getvalue())
            if cfg.plot_descriptors > 0:
                _plot(out / label / f"{stem}.png", real, sim, names, cfg.plot_descriptors,
                      f"{label} {stem}")
    atomic_write_json(out / "errors.json", errors)
    return {"errors": errors}


def stage_evaluate(cfg: RunConfig) -> dict:
    index = _index(cfg)
    out = _stage_dir(cfg, "evaluate")
    reports, errors = [], {}
    for label, files in index.items():
        system = _load_system(cfg, label)
        try:
            reports.append(evaluate(system, _load_clips(cfg, files), label, cfg.aliases()))
        except GomkitError as exc:
            errors[label] = f"{type(exc).__name__}: {exc}"
    atomic_write_text(out / "metrics.csv", reports_to_csv(reports))
    per_desc = {r.gesture: {"descriptors": r.descriptors,
                            "rmse": [round(v, 9) for v in r.rmse.tolist()],
                            "mae": [round(v, 9) for v in r.mae.tolist()],
                            "u1": [round(v, 9) for v in r.u1.tolist()]} for r in reports}
    atomic_write_json(out / "per_descriptor.json", per_desc)
    atomic_write_json(out / "errors.json", errors)
    return {"gestures": [r.gesture for r in reports], "errors": errors}


def stage_dexterity(cfg: RunConfig) -> dict:
    index = _index(cfg)
    out = _stage_dir(cfg, "dexterity")
    systems = []
    for label in index:
        system = _load_system(cfg, label)
        systems.append(system)
        atomic_write_text(out / f"{label}.md", system_markdown(system, cfg.threshold, label))
        atomic_write_text(out / f"{label}_sensor_counts.csv",
                          significance_counts(system, cfg.threshold).to_csv())
    ranking = vocabulary_ranking(systems, cfg.threshold)
    atomic_write_text(out / "sensor_counts.csv", ranking.to_csv())
    return {"ranking": ranking.ordering}


def _recognition_sensors(cfg) -> list:
    spec = cfg.hmm.sensors
    if spec in (None, "all"):
        return list(cfg.sensors)
    if isinstance(spec, str) and spec.startswith("top:"):
        k = int(spec.split(":", 1)[1])
        path = _require(Path(cfg.out_dir) / "dexterity" / "sensor_counts.csv")
        rows = list(csv.DictReader(io.StringIO(path.read_text())))
        return select_sensors(SensorRanking({r["sensor"]: int(r["count"]) for r in rows}), k)
    if isinstance(spec, str):
        return [s.strip() for s in spec.split(",") if s.strip()]
    return list(spec)


def stage_recognize(cfg: RunConfig) -> dict:
    from .bvh import AXES, DescriptorId

    index = _index(cfg)
    sensors = _recognition_sensors(cfg)
    manifest = cfg.manifest()
    min_reps = cfg.min_repetitions or manifest.min_repetitions
    out = _stage_dir(cfg, "recognize")
    descs = [DescriptorId(s, a) for s in sensors for a in AXES]
    seqs, labels = [], []
    for label, files in index.items():
        if len(files) < min_reps:
            log.info("skipping %s: %d repetitions < %d", label, len(files), min_reps)
            continue
        for clip in _load_clips(cfg, files):
            seqs.append(descriptor_matrix(clip, descs, cfg.aliases()))
            labels.append(label)
    n_states = cfg.hmm.n_states or manifest.hmm_states
    report = cross_validate(seqs, labels, n_states, cfg.hmm.topology, cfg.hmm.folds,
                            cfg.hmm.seed)
    atomic_write_text(out / "report.json", report.to_json())
    atomic_write_text(out / "recognition.csv", report.csv_row(cfg.dataset, sensors))
    return {"accuracy": report.accuracy, "f1": report.macro_f1}


STAGE_FUNCS = {
    "preprocess": stage_preprocess,
    "fit": stage_fit,
    "simulate": stage_simulate,
    "evaluate": stage_evaluate,
    "dexterity": stage_dexterity,
    "recognize": stage_recognize,
}


def run_pipeline(cfg: RunConfig, stage: str) -> dict:
    cfg.validate()
    if stage == "all":
        return {s: STAGE_FUNCS[s](cfg) for s in STAGES}
    if stage not in STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}")
    return STAGE_FUNCS[stage](cfg)
