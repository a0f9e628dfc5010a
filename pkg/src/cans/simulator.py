"""Slotted simulation of a camera network under bandwidth dynamics.

Each slot has one bandwidth value. The configuration is solved at slot 0
and afterwards only when bandwidth has drifted more than the trigger
threshold away from its value at the last successful reconfiguration.
Between reconfigurations the previous assignment is kept and its latency
and accuracy are re-evaluated at the current bandwidth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ProfileFormatError, StartupInfeasibleError, UsageError
from .model import Assignment
from .optimizer import (
    Policy,
    ProblemInstance,
    binding_constraint,
    evaluate,
    feasibility,
    solve_policy,
)

TIMELINE_HEADER = (
    "slot",
    "bandwidth_bps",
    "reconfigured",
    "stream_id",
    "resolution",
    "model_id",
    "latency_ms",
    "accuracy_pct",
    "objective",
)


@dataclass(frozen=True)
class BandwidthTrace:
    slots: Tuple[float, ...]
    source: str = ""

    def __post_init__(self) -> None:
        slots = tuple(float(b) for b in self.slots)
        if not slots:
            raise UsageError("bandwidth trace must not be empty")
        bad = [b for b in slots if not (math.isfinite(b) and b > 0)]
        if bad:
            raise UsageError(f"bandwidth values must be positive, got {bad[0]}")
        object.__setattr__(self, "slots", slots)

    def __len__(self) -> int:
        return len(self.slots)

    @classmethod
    def constant(cls, bandwidth: float, n_slots: int) -> "BandwidthTrace":
        return cls((bandwidth,) * n_slots, source=f"constant:{bandwidth:g}x{n_slots}")


@dataclass(frozen=True)
class TimelineRecord:
    slot: int
    bandwidth: float
    reconfigured: bool
    assignment: Assignment
    per_stream: Tuple[Tuple[float, float], ...]  # (latency s, accuracy fraction)
    objective: float
    feasible: bool = True
    held: bool = False  # a re-solve failed and the previous assignment was kept


def should_reconfigure(b_now: float, b_ref: float, threshold: float) -> bool:
    if not b_ref > 0:
        raise UsageError(f"reference bandwidth must be positive, got {b_ref}")
    return abs(b_now - b_ref) / b_ref > threshold


def generate_trace(kind: str, n_slots: int, *, seed: int = 0, **params) -> BandwidthTrace:
    """Synthetic bandwidth traces.

    ``steps``: ``levels`` (bps) switched at ``change_at`` slot indices.
    ``random_walk``: Gaussian steps of ``step_std`` (bps, default 10% of
    the span) clipped to ``[b_min, b_max]``, starting at ``start``
    (default mid-span).
    """
    if n_slots < 1:
        raise UsageError(f"n_slots must be >= 1, got {n_slots}")
    if kind == "steps":
        levels = list(params["levels"])
        change_at = list(params.get("change_at", ()))
        if len(levels) != len(change_at) + 1:
            raise UsageError("steps needs exactly one more level than change slots")
        if any(b <= a for a, b in zip(change_at, change_at[1:])) or (change_at and change_at[0] <= 0):
            raise UsageError("change slots must be strictly increasing and > 0")
        out, level = [], 0
        for t in range(n_slots):
            while level < len(change_at) and t >= change_at[level]:
                level += 1
            out.append(levels[level])
        return BandwidthTrace(tuple(out), source=f"steps:{levels}@{change_at}")
    if kind == "random_walk":
        b_min = float(params.get("b_min", 20e6))
        b_max = float(params.get("b_max", 100e6))
        if not 0 < b_min <= b_max:
            raise UsageError(f"need 0 < b_min <= b_max, got {b_min}, {b_max}")
        step = float(params.get("step_std", 0.1 * (b_max - b_min)))
        b = float(params.get("start", 0.5 * (b_min + b_max)))
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n_slots):
            b = min(b_max, max(b_min, b))
            out.append(b)
            b += rng.normal(0.0, step)
        return BandwidthTrace(tuple(out), source=f"random_walk:seed={seed}")
    raise UsageError(f"unknown trace kind {kind!r}")


def read_trace_csv(path: "str | Path") -> BandwidthTrace:
    """Read a ``slot,bandwidth_bps`` CSV; rows are ordered by slot."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or {"slot", "bandwidth_bps"} - set(reader.fieldnames):
            raise ProfileFormatError(f"{path}: expected header slot,bandwidth_bps")
        for lineno, row in enumerate(reader, 2):
            try:
                rows.append((int(row["slot"]), float(row["bandwidth_bps"])))
            except (TypeError, ValueError) as exc:
                raise ProfileFormatError(f"{path}:{lineno}: {exc}") from exc
    rows.sort()
    if [s for s, _ in rows] != list(range(len(rows))):
        raise ProfileFormatError(f"{path}: slots must be 0..n-1 without gaps")
    return BandwidthTrace(tuple(b for _, b in rows), source=str(path))


def write_trace_csv(path: "str | Path", trace: BandwidthTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "bandwidth_bps"])
        for t, b in enumerate(trace.slots):
            w.writerow([t, repr(b)])


def _record(
    instance: ProblemInstance, slot: int, assignment: Assignment, reconfigured: bool, held: bool
) -> TimelineRecord:
    scale = 0.01
    per_stream, total = [], 0.0
    for i, (r, j) in enumerate(assignment.choices):
        c = evaluate(instance, i, r, instance.model(j))
        per_stream.append((c.latency, c.accuracy_pct * scale))
        total += c.contribution
    return TimelineRecord(
        slot=slot,
        bandwidth=instance.params.bandwidth,
        reconfigured=reconfigured,
        assignment=assignment,
        per_stream=tuple(per_stream),
        objective=total,
        feasible=feasibility(instance, assignment).feasible,
        held=held,
    )


def run(
    instance: ProblemInstance, trace: BandwidthTrace, policy: "str | Policy"
) -> List[TimelineRecord]:
    """Simulate ``policy`` over ``trace``.

    Adaptive policies (CANS, delay-optimal) re-solve when the trigger
    fires; the accuracy-optimal and delay-chronic baselines configure once
    at slot 0 and never adapt. A failed re-solve keeps the previous
    assignment and marks the record as ``held``.
    """
    policy = Policy.parse(policy)
    threshold = instance.params.reconfig_threshold
    records: List[TimelineRecord] = []
    current: Optional[Assignment] = None
    b_ref = trace.slots[0]

    for t, b in enumerate(trace.slots):
        inst = instance.with_bandwidth(b)
        if t == 0:
            current = solve_policy(inst, policy)
            if current is None:
                where = binding_constraint(inst)
                raise StartupInfeasibleError(
                    f"no feasible configuration at slot 0 ({b:g} bps); binding constraint: {where}",
                    where,
                )
            records.append(_record(inst, t, current, True, False))
            continue

        fire = policy.adaptive and should_reconfigure(b, b_ref, threshold)
        held = False
        if fire:
            new = solve_policy(inst, policy)
            if new is None:
                held = True
            else:
                current, b_ref = new, b
        records.append(_record(inst, t, current, fire, held))
    return records


@dataclass
class Summary:
    mean_latency: float  # seconds
    mean_accuracy: float  # fraction
    mean_objective: float
    reconfig_count: int
    held_count: int
    infeasible_count: int
    per_stream_latency: List[float] = field(default_factory=list)
    per_stream_accuracy: List[float] = field(default_factory=list)


def aggregate(records: Sequence[TimelineRecord]) -> Summary:
    if not records:
        raise UsageError("cannot aggregate an empty timeline")
    K = len(records[0].per_stream)
    lat = np.array([[l for l, _ in r.per_stream] for r in records])
    acc = np.array([[a for _, a in r.per_stream] for r in records])
    return Summary(
        mean_latency=float(lat.mean()),
        mean_accuracy=float(acc.mean()),
        mean_objective=float(np.mean([r.objective for r in records])),
        reconfig_count=sum(r.reconfigured for r in records),
        held_count=sum(r.held for r in records),
        infeasible_count=sum(not r.feasible for r in records),
        per_stream_latency=[float(x) for x in lat.mean(axis=0)] if K else [],
        per_stream_accuracy=[float(x) for x in acc.mean(axis=0)] if K else [],
    )


def timeline_rows(instance: ProblemInstance, records: Sequence[TimelineRecord]):
    for rec in records:
        for s, (r, j), (lat, acc) in zip(instance.streams, rec.assignment.choices, rec.per_stream):
            yield (
                rec.slot,
                repr(rec.bandwidth),
                int(rec.reconfigured),
                s.id,
                r,
                j,
                repr(lat * 1000.0),
                repr(acc * 100.0),
                repr(rec.objective),
            )


def timeline_csv(instance: ProblemInstance, records: Sequence[TimelineRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMELINE_HEADER)
    w.writerows(timeline_rows(instance, records))
    return buf.getvalue()


def read_timeline_csv(path: "str | Path") -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TIMELINE_HEADER:
            raise ProfileFormatError(f"{path}: unexpected timeline header {reader.fieldnames}")
        return list(reader)
