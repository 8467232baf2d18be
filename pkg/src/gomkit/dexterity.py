"""Significance analysis of fitted GOM systems and sensor-subset selection."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

from .bvh import DescriptorId
from .errors import RangeError, UnknownDescriptorError
from .gom.topology import AssumptionTag

DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class Term:
    name: str
    regressor: DescriptorId
    lag: int
    coefficient: float
    p_value: float
    tag: AssumptionTag
    threshold: float

    @property
    def significant(self) -> bool:
        return self.p_value < self.threshold


@dataclass(frozen=True)
class EquationReport:
    descriptor: DescriptorId
    terms: tuple
    threshold: float

    @property
    def speed(self) -> str:
        """Both own lags significant: slow; one: moderate; none: fast."""
        n = sum(t.significant for t in self.terms if t.tag == AssumptionTag.H1)
        return ("fast", "moderate", "slow")[n]

    def significant_terms(self):
        return [t for t in self.terms if t.significant]

    def to_markdown(self) -> str:
        lines = [f"### {self.descriptor}  (speed: {self.speed})", "",
                 "| term | coefficient | p | assumption | significant |",
                 "|---|---:|---:|---|---|"]
        for t in self.terms:
            lines.append(f"| {t.name} | {t.coefficient:.4f} | {t.p_value:.4g} | {t.tag.value} "
                         f"| {'yes' if t.significant else 'no'} |")
        return "\n".join(lines) + "\n"


def equation_report(system, descriptor, threshold: float = DEFAULT_THRESHOLD) -> EquationReport:
    if isinstance(descriptor, str):
        descriptor = DescriptorId.parse(descriptor)
    if descriptor not in system.models:
        raise UnknownDescriptorError(f"{descriptor} is not modelled by this system")
    m = system.models[descriptor]
    tags = dict(system.topology.regressors[descriptor])
    terms = [Term(f"{descriptor}[t-{lag}]", descriptor, lag, float(m.alpha[lag - 1]),
                  float(m.p_values[f"alpha{lag}"]), AssumptionTag.H1, threshold)
             for lag in (1, 2)]
    for r, b in m.betas.items():
        terms.append(Term(f"{r}[t-1]", r, 1, float(b), float(m.p_values[str(r)]),
                          tags[r], threshold))
    return EquationReport(descriptor, tuple(terms), threshold)


def system_markdown(system, threshold: float = DEFAULT_THRESHOLD, title: str = "") -> str:
    parts = [f"# {title}\n"] if title else []
    parts += [equation_report(system, d, threshold).to_markdown()
              for d in system.topology.descriptors]
    return "\n".join(parts)


@dataclass
class SensorRanking:
    counts: dict = field(default_factory=dict)

    @property
    def ordering(self) -> list:
        return sorted(self.counts, key=lambda s: (-self.counts[s], s))

    def __add__(self, other: "SensorRanking") -> "SensorRanking":
        total = Counter(self.counts)
        total.update(other.counts)
        for s in set(self.counts) | set(other.counts):
            total.setdefault(s, 0)
        return SensorRanking(dict(total))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["sensor", "count"])
        for s in self.ordering:
            w.writerow([s, self.counts[s]])
        return out.getvalue()


def significance_counts(system, threshold: float = DEFAULT_THRESHOLD,
                        include_lags: bool = False) -> SensorRanking:
    """Number of equations in which each sensor contributes a significant term.

    A sensor counts once per equation however many of its axes are
    significant there. Own-lag terms are skipped unless ``include_lags``.
    """
    counts = {s: 0 for s in system.topology.sensor_set}
    for d in system.topology.descriptors:
        counts.setdefault(d.sensor, 0)
        rep = equation_report(system, d, threshold)
        hit = {t.regressor.sensor for t in rep.terms
               if t.significant and (include_lags or t.tag != AssumptionTag.H1)}
        for s in hit:
            counts[s] = counts.get(s, 0) + 1
    return SensorRanking(counts)


def vocabulary_ranking(systems, threshold: float = DEFAULT_THRESHOLD) -> SensorRanking:
    total = SensorRanking()
    for s in systems:
        total = total + significance_counts(s, threshold)
    return total


def select_sensors(ranking: SensorRanking, k: int) -> list:
    """Top-``k`` sensors by count; ties resolved by label."""
    order = ranking.ordering
    if not 1 <= k <= len(order):
        raise RangeError(f"k must be in [1, {len(order)}], got {k}")
    return order[:k]
