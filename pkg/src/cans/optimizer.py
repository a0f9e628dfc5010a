"""Configuration problem: constraints, objective and solvers.

Each stream picks one resolution from its ladder and one detector. The
objective is ``sum_i (latency_i - omega * accuracy_i) / q_i`` subject to a
latency deadline and a real-time processing bound per stream, plus one
shared-bandwidth budget that couples all streams.

Two solvers are provided. :func:`solve_bruteforce` enumerates every
assignment and is exact; :func:`solve_cans` is the greedy
O(|ladder| * N * K) heuristic used online. Both return ``None`` when no
assignment satisfies the constraints.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EnumerationCapError, InvariantError, UsageError
from .model import (
    Assignment,
    DetectionModel,
    GlobalParams,
    VideoStream,
    accuracy,
    bitrate,
    end_to_end_latency,
)

DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class ProblemInstance:
    streams: Tuple[VideoStream, ...]
    models: Tuple[DetectionModel, ...]
    params: GlobalParams

    def __post_init__(self) -> None:
        streams = tuple(self.streams)
        models = tuple(self.models)
        if not streams:
            raise InvariantError("at least one stream is required", "streams")
        if not models:
            raise InvariantError("at least one model is required", "models")
        _unique_ids(streams, "streams")
        _unique_ids(models, "models")
        for m_pos, m in enumerate(models):
            for s_pos, s in enumerate(streams):
                for r in s.resolution_ladder:
                    if not m.covers(r):
                        raise InvariantError(
                            f"model {m.id} has no latency for {r}p used by stream {s.id}",
                            f"models[{m_pos}].proc_latency",
                        )
        object.__setattr__(self, "streams", streams)
        object.__setattr__(self, "models", models)

    @property
    def K(self) -> int:
        return len(self.streams)

    @property
    def N(self) -> int:
        return len(self.models)

    def model(self, model_id: int) -> DetectionModel:
        for m in self.models:
            if m.id == model_id:
                return m
        raise KeyError(model_id)

    def replace_params(self, **changes) -> "ProblemInstance":
        return dataclasses.replace(
            self, params=dataclasses.replace(self.params, **changes)
        )

    def with_bandwidth(self, bandwidth: float) -> "ProblemInstance":
        return self.replace_params(bandwidth=bandwidth)

    def deadline(self, i: int) -> float:
        """Latency bound applied to stream at position ``i``."""
        if self.params.per_stream_deadline:
            return self.streams[i].deadline
        return self.params.l_max

    def validate(self, assignment: Assignment) -> None:
        if len(assignment) != self.K:
            raise InvariantError(
                f"expected {self.K} choices, got {len(assignment)}", "assignment"
            )
        ids = {m.id for m in self.models}
        for i, (s, (r, j)) in enumerate(zip(self.streams, assignment.choices)):
            if r not in s.resolution_ladder:
                raise InvariantError(
                    f"{r}p is not on stream {s.id}'s ladder", f"assignment[{i}]"
                )
            if j not in ids:
                raise InvariantError(f"unknown model {j}", f"assignment[{i}]")


def _unique_ids(items, name: str) -> None:
    seen = set()
    for pos, item in enumerate(items):
        if item.id in seen:
            raise InvariantError(f"duplicate id {item.id}", f"{name}[{pos}].id")
        seen.add(item.id)


@dataclass(frozen=True)
class FeasibilityReport:
    deadline_ok: Tuple[bool, ...]
    processing_ok: Tuple[bool, ...]
    bandwidth_ok: bool

    @property
    def feasible(self) -> bool:
        return self.bandwidth_ok and all(self.deadline_ok) and all(self.processing_ok)

    def violations(self) -> List[str]:
        out = [f"deadline(stream {i})" for i, ok in enumerate(self.deadline_ok) if not ok]
        out += [f"processing(stream {i})" for i, ok in enumerate(self.processing_ok) if not ok]
        if not self.bandwidth_ok:
            out.append("bandwidth")
        return out


@dataclass(frozen=True)
class Candidate:
    """One evaluated ``(resolution, model)`` pair for a single stream."""

    resolution: int
    model_id: int
    latency: float
    proc: float
    accuracy_pct: float
    bits: float
    contribution: float
    deadline_ok: bool
    processing_ok: bool

    @property
    def admissible(self) -> bool:
        return self.deadline_ok and self.processing_ok

    @property
    def key(self) -> Tuple[float, float, int, int]:
        return (self.contribution, self.latency, self.resolution, self.model_id)


def evaluate(instance: ProblemInstance, i: int, r: int, model: DetectionModel) -> Candidate:
    s = instance.streams[i]
    p = instance.params
    lat = end_to_end_latency(s, r, model, p.bandwidth, p.alpha)
    proc = model.processing_latency(r)
    acc = accuracy(model, r)
    return Candidate(
        resolution=r,
        model_id=model.id,
        latency=lat,
        proc=proc,
        accuracy_pct=acc,
        bits=bitrate(r, p.alpha),
        contribution=_contribution(lat, acc, s.qos, p),
        deadline_ok=lat <= instance.deadline(i),
        processing_ok=proc <= 1.0 / s.framerate,
    )


def _contribution(latency: float, acc_pct: float, qos: float, p: GlobalParams) -> float:
    return (latency - p.omega * (acc_pct * p.accuracy_scale)) / qos


def stream_candidates(instance: ProblemInstance, i: int) -> List[Candidate]:
    """All pairs for stream ``i``, ordered by resolution then model id."""
    models = sorted(instance.models, key=lambda m: m.id)
    return [
        evaluate(instance, i, r, m)
        for r in instance.streams[i].resolution_ladder
        for m in models
    ]


def _chosen(instance: ProblemInstance, assignment: Assignment) -> List[Candidate]:
    instance.validate(assignment)
    return [
        evaluate(instance, i, r, instance.model(j))
        for i, (r, j) in enumerate(assignment.choices)
    ]


def check_deadline(instance: ProblemInstance, assignment: Assignment) -> Tuple[bool, ...]:
    return tuple(c.deadline_ok for c in _chosen(instance, assignment))


def check_processing(instance: ProblemInstance, assignment: Assignment) -> Tuple[bool, ...]:
    return tuple(c.processing_ok for c in _chosen(instance, assignment))


def check_bandwidth(instance: ProblemInstance, assignment: Assignment) -> bool:
    instance.validate(assignment)
    total = math.fsum(bitrate(r, instance.params.alpha) for r in assignment.resolutions)
    return total <= instance.params.bandwidth


def feasibility(instance: ProblemInstance, assignment: Assignment) -> FeasibilityReport:
    chosen = _chosen(instance, assignment)
    return FeasibilityReport(
        deadline_ok=tuple(c.deadline_ok for c in chosen),
        processing_ok=tuple(c.processing_ok for c in chosen),
        bandwidth_ok=check_bandwidth(instance, assignment),
    )


def objective(instance: ProblemInstance, assignment: Assignment) -> float:
    """QoS-weighted latency minus omega-weighted accuracy (lower is better)."""
    total = 0.0
    for c in _chosen(instance, assignment):
        total += c.contribution
    return total


def accuracy_term(instance: ProblemInstance, assignment: Assignment) -> float:
    """``sum_i accuracy_i / q_i`` in the instance's accuracy units."""
    scale = instance.params.accuracy_scale
    total = 0.0
    for s, c in zip(instance.streams, _chosen(instance, assignment)):
        total += c.accuracy_pct * scale / s.qos
    return total


# -- exact solver -----------------------------------------------------------


def search_space_size(instance: ProblemInstance) -> int:
    n = 1
    for s in instance.streams:
        n *= len(s.resolution_ladder) * instance.N
    return n


def solve_bruteforce(
    instance: ProblemInstance, cap: int = DEFAULT_ENUMERATION_CAP
) -> Optional[Assignment]:
    """Exact minimiser by exhaustive enumeration.

    Ties on the objective are broken by lower total latency, then lower
    resolutions, then lower model ids (both compared stream by stream).
    """
    size = search_space_size(instance)
    if size > cap:
        raise EnumerationCapError(
            f"{size} candidate assignments exceed the cap of {cap}; use solve_cans"
        )
    # constraints (2) and (3) are per stream, so prune before the product
    per_stream = [
        [c for c in stream_candidates(instance, i) if c.admissible]
        for i in range(instance.K)
    ]
    if any(not cands for cands in per_stream):
        return None

    obj = np.zeros(())
    bits = np.zeros(())
    lat = np.zeros(())
    for cands in per_stream:
        obj = obj[..., None] + np.array([c.contribution for c in cands])
        bits = bits[..., None] + np.array([c.bits for c in cands])
        lat = lat[..., None] + np.array([c.latency for c in cands])

    # exact for integer resolutions; fsum re-check below guards the rest
    obj = np.where(bits <= instance.params.bandwidth, obj, np.inf)
    best = obj.min()
    if not np.isfinite(best):
        return None

    def tie_key(flat: int):
        idx = np.unravel_index(flat, obj.shape)
        picks = [per_stream[i][k] for i, k in enumerate(idx)]
        return (
            float(lat.flat[flat]),
            tuple(c.resolution for c in picks),
            tuple(c.model_id for c in picks),
        ), picks

    ties = np.flatnonzero(obj == best)
    _, picks = min((tie_key(int(t)) for t in ties), key=lambda kp: kp[0])
    result = Assignment(tuple((c.resolution, c.model_id) for c in picks))
    if not check_bandwidth(instance, result):
        return None
    return result


# -- greedy solver ----------------------------------------------------------


@dataclass
class SolveStats:
    """Work counters filled in by :func:`solve_cans`."""

    evaluations: int = 0
    repair_steps: int = 0


def solve_cans(
    instance: ProblemInstance, stats: Optional[SolveStats] = None
) -> Optional[Assignment]:
    """Greedy configuration in O(|ladder| * N * K).

    Streams are served in descending weight 1/q (ties by position). Each
    takes its best admissible pair whose bitrate fits in the bandwidth left
    after reserving the lowest rung for every stream not yet served. If a
    stream finds nothing, already-served streams are degraded one ladder
    rung at a time, lowest weight first, until it fits or nothing is left
    to degrade.
    """
    stats = stats if stats is not None else SolveStats()
    K = instance.K
    b = instance.params.bandwidth

    cands: List[List[Candidate]] = []
    for i in range(K):
        cs = stream_candidates(instance, i)
        stats.evaluations += len(cs)
        cands.append([c for c in cs if c.admissible])

    order = sorted(range(K), key=lambda i: (-instance.streams[i].weight, i))
    floor_bits = [bitrate(s.resolution_ladder[0], instance.params.alpha) for s in instance.streams]
    chosen: Dict[int, Candidate] = {}

    def fits(i: int, c: Candidate, pending: Sequence[int]) -> bool:
        parts = [chosen[k].bits for k in chosen if k != i]
        parts.append(c.bits)
        parts.extend(floor_bits[k] for k in pending)
        return math.fsum(parts) <= b

    def best_for(i: int, pending: Sequence[int], below: Optional[int] = None):
        pool = [
            c for c in cands[i]
            if (below is None or c.resolution < below) and fits(i, c, pending)
        ]
        return min(pool, key=lambda c: c.key) if pool else None

    for pos, i in enumerate(order):
        pending = order[pos + 1:]
        pick = best_for(i, pending)
        while pick is None:
            if not _degrade_one(chosen, order, best_for, pending, i, stats):
                return None
            pick = best_for(i, pending)
        chosen[i] = pick

    result = Assignment(tuple((chosen[i].resolution, chosen[i].model_id) for i in range(K)))
    if not feasibility(instance, result).feasible:
        return None
    return result


def _degrade_one(chosen, order, best_for, pending, current, stats) -> bool:
    """Drop one served stream to a lower rung; False when none can move."""
    for k in reversed(order):
        if k not in chosen or k == current:
            continue
        held = chosen.pop(k)
        # pending streams still only need their floor; current is not yet placed
        lower = best_for(k, [current, *pending], below=held.resolution)
        if lower is None:
            chosen[k] = held
            continue
        chosen[k] = lower
        stats.repair_steps += 1
        return True
    return False


# -- policies ---------------------------------------------------------------


class Policy(str, enum.Enum):
    ACCURACY_OPTIMAL = "accuracy_optimal"
    DELAY_OPTIMAL = "delay_optimal"
    DELAY_CHRONIC = "delay_chronic"
    CANS = "cans"

    @classmethod
    def parse(cls, name: "str | Policy") -> "Policy":
        if isinstance(name, Policy):
            return name
        key = str(name).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise UsageError(f"unknown policy {name!r} (expected one of: {valid})") from None

    @property
    def adaptive(self) -> bool:
        """Whether the policy re-solves when bandwidth moves past the trigger."""
        return self in (Policy.CANS, Policy.DELAY_OPTIMAL)


def _accuracy_optimal(instance: ProblemInstance) -> Assignment:
    out = []
    for i, s in enumerate(instance.streams):
        r = s.resolution_ladder[-1]
        cs = [evaluate(instance, i, r, m) for m in instance.models]
        c = min(cs, key=lambda c: (-c.accuracy_pct, c.latency, c.model_id))
        out.append((r, c.model_id))
    return Assignment(tuple(out))


def _delay_optimal(instance: ProblemInstance) -> Assignment:
    out = []
    for i in range(instance.K):
        c = min(stream_candidates(instance, i), key=lambda c: (c.latency, c.resolution, c.model_id))
        out.append((c.resolution, c.model_id))
    return Assignment(tuple(out))


def _delay_chronic(instance: ProblemInstance) -> Optional[Assignment]:
    # keep the highest resolution that can honour the hard latency bounds,
    # then take the fastest detector there; streams are handled independently
    out = []
    for i, s in enumerate(instance.streams):
        pick = None
        for r in reversed(s.resolution_ladder):
            ok = [c for c in (evaluate(instance, i, r, m) for m in instance.models) if c.admissible]
            if ok:
                pick = min(ok, key=lambda c: (c.latency, c.model_id))
                break
        if pick is None:
            return None
        out.append((pick.resolution, pick.model_id))
    return Assignment(tuple(out))


def solve_policy(instance: ProblemInstance, policy: "str | Policy") -> Optional[Assignment]:
    """Configure every stream according to ``policy``.

    The accuracy- and delay-optimal baselines ignore the constraints and
    always return an assignment; use :func:`feasibility` to see what they
    violate. Delay-chronic and CANS return ``None`` when infeasible.
    """
    policy = Policy.parse(policy)
    if policy is Policy.ACCURACY_OPTIMAL:
        return _accuracy_optimal(instance)
    if policy is Policy.DELAY_OPTIMAL:
        return _delay_optimal(instance)
    if policy is Policy.DELAY_CHRONIC:
        return _delay_chronic(instance)
    return solve_cans(instance)


def binding_constraint(instance: ProblemInstance) -> str:
    """Best guess at which constraint makes ``instance`` infeasible."""
    a = instance.params.alpha
    floor = math.fsum(bitrate(s.resolution_ladder[0], a) for s in instance.streams)
    if floor > instance.params.bandwidth:
        return "bandwidth"
    for i, s in enumerate(instance.streams):
        cs = stream_candidates(instance, i)
        if not any(c.processing_ok for c in cs):
            return f"processing(stream {s.id})"
        if not any(c.admissible for c in cs):
            return f"deadline(stream {s.id})"
    return "bandwidth"
