"""IOU matching and F1 scoring of detections against a golden configuration.

Detection files are CSV with header ``frame_id,x_min,y_min,x_max,y_max``,
one box per row. A row with only ``frame_id`` filled in declares a frame
that has no boxes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .errors import FrameMismatchError, InvariantError, ProfileFormatError

DETECTION_HEADER = ("frame_id", "x_min", "y_min", "x_max", "y_max")


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.x_max > self.x_min:
            raise InvariantError("x_max must exceed x_min", "x_max")
        if not self.y_max > self.y_min:
            raise InvariantError("y_max must exceed y_min", "y_max")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class FrameDetections:
    frame_id: int
    boxes: Tuple[BoundingBox, ...] = ()

    def __post_init__(self) -> None:
        if self.frame_id < 0:
            raise InvariantError("must be >= 0", "frame_id")
        object.__setattr__(self, "boxes", tuple(self.boxes))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0 or h <= 0:
        return 0.0
    inter = w * h
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def match_frame(
    detected: FrameDetections, golden: FrameDetections, iou_min: float
) -> Tuple[int, int, int]:
    """Greedy one-to-one matching; returns ``(tp, fp, fn)``.

    Pairs are taken in descending IOU (ties: lower detected index, then
    lower golden index) and count as true positives only when IOU is
    strictly above ``iou_min``.
    """
    if detected.frame_id != golden.frame_id:
        raise FrameMismatchError(
            f"frame ids differ: detected {detected.frame_id}, golden {golden.frame_id}"
        )
    pairs = []
    for d, db in enumerate(detected.boxes):
        for g, gb in enumerate(golden.boxes):
            v = iou(db, gb)
            if v > iou_min:
                pairs.append((-v, d, g))
    pairs.sort()
    used_d, used_g = set(), set()
    for _, d, g in pairs:
        if d in used_d or g in used_g:
            continue
        used_d.add(d)
        used_g.add(g)
    tp = len(used_d)
    return tp, len(detected.boxes) - tp, len(golden.boxes) - tp


def f1(tp: int, fp: int, fn: int) -> float:
    if min(tp, fp, fn) < 0:
        raise ValueError(f"counts must be non-negative, got {(tp, fp, fn)}")
    if tp == 0:
        # an empty frame scored against an empty golden frame is perfect
        return 1.0 if fp == 0 and fn == 0 else 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def frame_scores(
    detected_seq: Sequence[FrameDetections],
    golden_seq: Sequence[FrameDetections],
    iou_min: float,
) -> List[Tuple[int, float]]:
    """Per-frame ``(frame_id, F1)`` sorted by frame id."""
    det = {f.frame_id: f for f in detected_seq}
    gold = {f.frame_id: f for f in golden_seq}
    if len(det) != len(detected_seq) or len(gold) != len(golden_seq):
        raise FrameMismatchError("duplicate frame ids in a detection sequence")
    if det.keys() != gold.keys():
        missing = sorted(det.keys() ^ gold.keys())
        raise FrameMismatchError(f"frame id sets differ; unmatched frames {missing[:10]}")
    return [(k, f1(*match_frame(det[k], gold[k], iou_min))) for k in sorted(det)]


def video_accuracy(
    detected_seq: Sequence[FrameDetections],
    golden_seq: Sequence[FrameDetections],
    iou_min: float,
) -> float:
    """Unweighted mean per-frame F1 of a video."""
    scores = frame_scores(detected_seq, golden_seq, iou_min)
    if not scores:
        raise FrameMismatchError("no frames to score")
    return sum(s for _, s in scores) / len(scores)


def read_detections_csv(path: "str | Path") -> List[FrameDetections]:
    frames: Dict[int, List[BoundingBox]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DETECTION_HEADER:
            raise ProfileFormatError(f"{path}: expected header {','.join(DETECTION_HEADER)}")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                fid = int(row[0])
                boxes = frames.setdefault(fid, [])
                coords = [c.strip() for c in row[1:]]
                if any(coords):
                    boxes.append(BoundingBox(*(float(c) for c in coords)))
            except (TypeError, ValueError) as exc:
                raise ProfileFormatError(f"{path}:{lineno}: {exc}") from exc
    return [FrameDetections(k, tuple(v)) for k, v in sorted(frames.items())]


def write_detections_csv(path: "str | Path", frames: Sequence[FrameDetections]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DETECTION_HEADER)
        for f in frames:
            if not f.boxes:
                w.writerow([f.frame_id, "", "", "", ""])
            for b in f.boxes:
                w.writerow([f.frame_id, repr(b.x_min), repr(b.y_min), repr(b.x_max), repr(b.y_max)])
