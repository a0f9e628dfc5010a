"""Domain types and the analytic latency, bitrate and accuracy functions.

Units are SI throughout: resolutions in (vertical) pixels, bitrates and
bandwidths in bits per second, latencies in seconds. Accuracy curves are
expressed in percent; the optimizer decides how to scale them.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Tuple

from .errors import DomainError, InvariantError, ProfileMissingError

DEFAULT_LADDER: Tuple[int, ...] = (360, 540, 720, 900, 1080)

ACCURACY_UNITS = ("fraction", "percent")


def _positive(value: float, name: str) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvariantError(f"must be a positive finite number, got {value!r}", name)


@dataclass(frozen=True)
class VideoStream:
    id: int
    framerate: float
    qos: float
    deadline: float
    resolution_ladder: Tuple[int, ...] = DEFAULT_LADDER

    def __post_init__(self) -> None:
        _positive(self.framerate, "framerate")
        _positive(self.qos, "qos")
        _positive(self.deadline, "deadline")
        ladder = tuple(self.resolution_ladder)
        if not ladder:
            raise InvariantError("must not be empty", "resolution_ladder")
        for r in ladder:
            _positive(r, "resolution_ladder")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise InvariantError("must be strictly increasing", "resolution_ladder")
        object.__setattr__(self, "resolution_ladder", ladder)

    @property
    def weight(self) -> float:
        """Objective weight 1/q."""
        return 1.0 / self.qos


@dataclass(frozen=True)
class DetectionModel:
    """A deployable detector.

    ``proc_latency`` maps profiled resolutions to processing seconds per
    frame; values in between are linearly interpolated, values outside the
    profiled range are rejected. ``accuracy_coeffs`` are ``(c2, c1, c0)``
    of the accuracy curve in percent.
    """

    id: int
    proc_latency: Mapping[int, float]
    accuracy_coeffs: Tuple[float, float, float]
    name: str = ""
    _grid: Tuple[Tuple[float, ...], Tuple[float, ...]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not self.proc_latency:
            raise InvariantError("must not be empty", "proc_latency")
        table = {}
        for r, lat in self.proc_latency.items():
            _positive(r, "proc_latency")
            _positive(lat, f"proc_latency[{r}]")
            table[r] = float(lat)
        table = dict(sorted(table.items()))
        object.__setattr__(self, "proc_latency", table)
        object.__setattr__(self, "_grid", (tuple(table), tuple(table.values())))

        coeffs = tuple(float(c) for c in self.accuracy_coeffs)
        if len(coeffs) != 3 or not all(math.isfinite(c) for c in coeffs):
            raise InvariantError("must be three finite numbers", "accuracy_coeffs")
        if coeffs[0] >= 0:
            raise InvariantError("curve must be concave (c2 < 0)", "accuracy_coeffs")
        object.__setattr__(self, "accuracy_coeffs", coeffs)

    def covers(self, r: float) -> bool:
        xs = self._grid[0]
        return xs[0] <= r <= xs[-1]

    def processing_latency(self, r: float) -> float:
        xs, ys = self._grid
        if not self.covers(r):
            raise ProfileMissingError(
                f"model {self.id} has no latency profile for {r}p "
                f"(profiled {xs[0]}..{xs[-1]})",
                "proc_latency",
            )
        k = bisect.bisect_left(xs, r)
        if xs[k] == r:
            return ys[k]
        x0, x1, y0, y1 = xs[k - 1], xs[k], ys[k - 1], ys[k]
        return y0 + (y1 - y0) * (r - x0) / (x1 - x0)


@dataclass(frozen=True)
class GlobalParams:
    """System-wide parameters.

    ``l_max`` is the deadline used by the latency constraint; by default it
    applies to every stream. With ``per_stream_deadline`` each stream is
    checked against its own deadline instead. ``accuracy_units`` selects
    whether accuracy enters the objective as a fraction or in percent.
    """

    alpha: float = 8.0
    omega: float = 6.0
    bandwidth: float = 100e6
    l_max: float = 0.080
    reconfig_threshold: float = 0.10
    iou_min: float = 0.7
    per_stream_deadline: bool = False
    accuracy_units: str = "fraction"

    def __post_init__(self) -> None:
        _positive(self.alpha, "alpha")
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise InvariantError(f"must be >= 0, got {self.omega!r}", "omega")
        _positive(self.bandwidth, "bandwidth")
        _positive(self.l_max, "l_max")
        if not 0 < self.reconfig_threshold < 1:
            raise InvariantError("must lie in (0, 1)", "reconfig_threshold")
        if not 0 < self.iou_min <= 1:
            raise InvariantError("must lie in (0, 1]", "iou_min")
        if self.accuracy_units not in ACCURACY_UNITS:
            raise InvariantError(
                f"must be one of {ACCURACY_UNITS}", "accuracy_units"
            )

    @property
    def accuracy_scale(self) -> float:
        """Multiplier turning percent accuracy into objective units."""
        return 0.01 if self.accuracy_units == "fraction" else 1.0


@dataclass(frozen=True)
class Assignment:
    """Per-stream ``(resolution, model_id)`` choices, in stream order."""

    choices: Tuple[Tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "choices", tuple((int(r), int(j)) for r, j in self.choices)
        )

    @property
    def resolutions(self) -> Tuple[int, ...]:
        return tuple(r for r, _ in self.choices)

    @property
    def model_ids(self) -> Tuple[int, ...]:
        return tuple(j for _, j in self.choices)

    def __len__(self) -> int:
        return len(self.choices)


def bitrate(r: float, alpha: float) -> float:
    """Stream bitrate ``alpha * r**2`` in bits per second."""
    if not (r > 0 and alpha > 0):
        raise DomainError(f"resolution and alpha must be positive, got r={r}, alpha={alpha}")
    return alpha * r * r


def transmission_latency(
    stream: VideoStream, r: float, bandwidth: float, alpha: float
) -> float:
    """Expected per-frame transmission time over a channel of ``bandwidth``."""
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    if not stream.framerate > 0:
        raise DomainError(f"framerate must be positive, got {stream.framerate}")
    return bitrate(r, alpha) / (stream.framerate * bandwidth)


def end_to_end_latency(
    stream: VideoStream,
    r: float,
    model: DetectionModel,
    bandwidth: float,
    alpha: float,
) -> float:
    return transmission_latency(stream, r, bandwidth, alpha) + model.processing_latency(r)


def accuracy_curve(coeffs: Sequence[float], r: float) -> float:
    """Evaluate a quadratic accuracy curve at ``r`` and clamp to [0, 100]."""
    if not r > 0:
        raise DomainError(f"resolution must be positive, got {r}")
    c2, c1, c0 = coeffs
    value = c2 * r * r + c1 * r + c0
    return min(100.0, max(0.0, value))


def accuracy(model: DetectionModel, r: float) -> float:
    """Detection accuracy in percent of ``model`` at resolution ``r``."""
    return accuracy_curve(model.accuracy_coeffs, r)
