"""Accuracy-curve fitting and profile (de)serialisation.

A profile is a JSON document::

    {
      "params":  {"alpha": 8, "omega": 6, "bandwidth": 1e8, "l_max": 0.08, ...},
      "streams": [{"id": 1, "framerate": 30, "qos": 1, "deadline": 0.08,
                   "resolution_ladder": [360, 540, 720, 900, 1080]}, ...],
      "models":  [{"id": 1, "name": "...", "proc_latency": {"360": 0.003, ...},
                   "accuracy_coeffs": [c2, c1, c0]}, ...]
    }

All quantities are SI (seconds, bits per second). See docs/profile_format.md.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import InvariantError, ProfileFormatError, ProfileMissingError
from .model import DetectionModel, GlobalParams, VideoStream, accuracy_curve
from .optimizer import ProblemInstance

# resolutions are divided by this before building the normal equations
_RESCALE = 1000.0


@dataclass(frozen=True)
class AccuracySample:
    resolution: float
    accuracy: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.resolution) and self.resolution > 0):
            raise InvariantError(f"must be positive, got {self.resolution}", "resolution")
        if not (0.0 <= self.accuracy <= 100.0):
            raise InvariantError(f"must lie in [0, 100], got {self.accuracy}", "accuracy")


@dataclass(frozen=True)
class CurveFit:
    coeffs: Tuple[float, float, float]
    mse: float

    def __call__(self, r: float) -> float:
        return accuracy_curve(self.coeffs, r)


def fit_accuracy_curve(samples: Sequence[AccuracySample]) -> CurveFit:
    """Least-squares quadratic ``a = c2*r**2 + c1*r + c0`` through ``samples``.

    Solved through the 3x3 normal equations on rescaled resolutions; the
    returned ``mse`` is the mean squared residual of the unclamped curve.
    """
    r = np.array([s.resolution for s in samples], dtype=float)
    a = np.array([s.accuracy for s in samples], dtype=float)
    if len(np.unique(r)) < 3:
        raise InvariantError(
            f"need at least 3 distinct resolutions, got {len(np.unique(r))}", "samples"
        )
    x = r / _RESCALE
    V = np.column_stack([x * x, x, np.ones_like(x)])
    scaled = np.linalg.solve(V.T @ V, V.T @ a)
    coeffs = (
        float(scaled[0] / _RESCALE**2),
        float(scaled[1] / _RESCALE),
        float(scaled[2]),
    )
    residual = a - (coeffs[0] * r * r + coeffs[1] * r + coeffs[2])
    return CurveFit(coeffs, float(np.mean(residual**2)))


def read_samples_csv(path: "str | Path") -> List[AccuracySample]:
    """Read a ``resolution,accuracy`` CSV (header optional)."""
    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip().lower() == "resolution":
                continue
            try:
                out.append(AccuracySample(float(row[0]), float(row[1])))
            except (IndexError, ValueError) as exc:
                raise ProfileFormatError(f"{path}:{lineno}: {exc}") from exc
    return out


# -- profiles ---------------------------------------------------------------


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ProfileFormatError(f"{where}: expected an object, got {type(data).__name__}")
    allowed = {f.name for f in fields(cls) if f.init}
    unknown = set(data) - allowed
    if unknown:
        raise ProfileFormatError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except InvariantError as exc:
        path = f"{where}.{exc.field}" if exc.field else where
        raise type(exc)(exc.message, path) from None
    except TypeError as exc:
        raise ProfileFormatError(f"{where}: {exc}") from None


def _stream(data: Any, where: str) -> VideoStream:
    if isinstance(data, dict) and "resolution_ladder" in data:
        data = {**data, "resolution_ladder": tuple(data["resolution_ladder"])}
    return _build(VideoStream, data, where)


def _model(data: Any, where: str) -> DetectionModel:
    if isinstance(data, dict) and isinstance(data.get("proc_latency"), dict):
        try:
            table = {int(k): v for k, v in data["proc_latency"].items()}
        except ValueError as exc:
            raise ProfileFormatError(f"{where}.proc_latency: {exc}") from None
        data = {**data, "proc_latency": table}
    if isinstance(data, dict) and "accuracy_coeffs" in data:
        data = {**data, "accuracy_coeffs": tuple(data["accuracy_coeffs"])}
    return _build(DetectionModel, data, where)


def parse_profiles(doc: Dict[str, Any]) -> Tuple[List[VideoStream], List[DetectionModel], GlobalParams]:
    for key in ("streams", "models"):
        if not isinstance(doc.get(key), list):
            raise ProfileFormatError(f"missing or non-list top-level key {key!r}")
    streams = [_stream(s, f"streams[{k}]") for k, s in enumerate(doc["streams"])]
    models = [_model(m, f"models[{k}]") for k, m in enumerate(doc["models"])]
    raw = dict(doc.get("params") or {})
    if "l_max" not in raw and streams:
        raw["l_max"] = min(s.deadline for s in streams)
    params = _build(GlobalParams, raw, "params")
    # files must list every rung explicitly; interpolation is for ad-hoc lookups
    for k, m in enumerate(models):
        for s in streams:
            missing = [r for r in s.resolution_ladder if r not in m.proc_latency]
            if missing:
                raise ProfileMissingError(
                    f"model {m.id} has no latency entry for {missing[0]}p on stream {s.id}'s ladder",
                    f"models[{k}].proc_latency",
                )
    # duplicate ids and latency coverage are checked by the instance itself
    ProblemInstance(tuple(streams), tuple(models), params)
    return streams, models, params


def load_profiles(path: "str | Path") -> Tuple[List[VideoStream], List[DetectionModel], GlobalParams]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileFormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProfileFormatError(f"{path}: top level must be an object")
    return parse_profiles(doc)


def load_instance(path: "str | Path") -> ProblemInstance:
    streams, models, params = load_profiles(path)
    return ProblemInstance(tuple(streams), tuple(models), params)


def profiles_to_dict(
    streams: Iterable[VideoStream], models: Iterable[DetectionModel], params: GlobalParams
) -> Dict[str, Any]:
    return {
        "params": {f.name: getattr(params, f.name) for f in fields(params)},
        "streams": [
            {
                "id": s.id,
                "framerate": s.framerate,
                "qos": s.qos,
                "deadline": s.deadline,
                "resolution_ladder": list(s.resolution_ladder),
            }
            for s in streams
        ],
        "models": [
            {
                "id": m.id,
                "name": m.name,
                "proc_latency": {str(r): v for r, v in m.proc_latency.items()},
                "accuracy_coeffs": list(m.accuracy_coeffs),
            }
            for m in models
        ],
    }


def save_profiles(
    path: "str | Path",
    streams: Iterable[VideoStream],
    models: Iterable[DetectionModel],
    params: GlobalParams,
) -> None:
    doc = profiles_to_dict(streams, models, params)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
