"""Primal gap, primal integral, shifted geometric mean and incumbent traces."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class TraceRecord:
    elapsed_seconds: float
    objective: float
    source: str = ""


@dataclass
class IncumbentTrace:
    """Time-ordered objective improvements (objectives in the user's sense)."""

    records: list[TraceRecord] = field(default_factory=list)

    def append(self, elapsed: float, objective: float, source: str = "") -> None:
        self.records.append(TraceRecord(float(elapsed), float(objective), source))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_ndjson(self) -> str:
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in self.records)

    def write(self, path) -> None:
        Path(path).write_text(self.to_ndjson())

    @classmethod
    def from_ndjson(cls, text: str) -> "IncumbentTrace":
        out = cls()
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                out.append(d["elapsed_seconds"], d["objective"], d.get("source", ""))
        return out

    @classmethod
    def read(cls, path) -> "IncumbentTrace":
        return cls.from_ndjson(Path(path).read_text())


def primal_gap(z: float | None, z_ref: float) -> float:
    """Normalized distance of ``z`` to the reference value, in ``[0, 1]``."""
    if z is None or (isinstance(z, float) and math.isnan(z)):
        return 1.0
    if z == 0.0 and z_ref == 0.0:
        return 0.0
    if z * z_ref < 0:
        return 1.0
    return abs(z_ref - z) / max(abs(z_ref), abs(z))


def integrate_gaps(steps, horizon: float) -> float:
    """Integral over ``[0, horizon]`` of a gap step function.

    ``steps`` is a sequence of ``(time, gap)``; the gap is 1 before the first
    step and holds each value until the next step.
    """
    parts = []
    t_prev, g_prev = 0.0, 1.0
    for t, g in steps:
        t = min(max(float(t), 0.0), horizon)
        parts.append(g_prev * (t - t_prev))
        t_prev, g_prev = t, float(g)
    parts.append(g_prev * (horizon - t_prev))
    return math.fsum(parts)


def primal_integral(trace, z_ref: float, horizon: float) -> float:
    """Primal integral of a trace against ``z_ref`` over ``[0, horizon]`` seconds."""
    records = trace.records if isinstance(trace, IncumbentTrace) else list(trace)
    steps = []
    for rec in records:
        if isinstance(rec, TraceRecord):
            t, z = rec.elapsed_seconds, rec.objective
        else:
            t, z = rec[0], rec[1]
        if t > horizon:
            break
        steps.append((t, primal_gap(z, z_ref)))
    return integrate_gaps(steps, horizon)


def shifted_geomean(values, shift: float = 1.0) -> float:
    """``exp(mean(log(v + shift))) - shift``."""
    values = list(values)
    if not values:
        raise ValueError("shifted geometric mean of an empty list")
    if shift <= 0:
        raise ValueError("shift must be positive")
    return math.exp(math.fsum(math.log(v + shift) for v in values) / len(values)) - shift
