"""Per-frame match classification and sequence-level evaluation.

A frame with both a prediction and ground truth is a true positive when the
overlap clears the threshold, otherwise a false positive (the box is wrong,
but the target was not missed outright). A prediction with no ground truth
is a false positive; ground truth with no prediction is a false negative.
Distance and overlap statistics are averaged only over frames where both
boxes exist.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .boxes import BBox, center_distance, iou

TP = "TP"
FP = "FP"
FN = "FN"
SKIP = "SKIP"


@dataclass(frozen=True)
class FrameMatch:
    kind: str
    iou: Optional[float] = None
    center_dist: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (TP, FP, FN, SKIP):
            raise ValueError(f"unknown match kind: {self.kind!r}")


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    mean_iou: float
    ope: float
    frames_evaluated: int
    tp: int = 0
    fp: int = 0
    fn: int = 0
    # Average overlap counting frames with a missing box as zero overlap.
    # The headline mean_iou covers matched frames only; both are reported.
    mean_iou_all: float = 0.0

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "mean_iou": self.mean_iou,
            "ope": self.ope,
            "frames_evaluated": self.frames_evaluated,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "mean_iou_all": self.mean_iou_all,
        }


def classify_frame(pred: Optional[BBox], gt: Optional[BBox], tau: float = 0.5) -> FrameMatch:
    """Classify one frame's outcome against ground truth.

    tau is the minimum IOU for a prediction to count as a true positive.
    """
    if not 0 < tau < 1:
        raise ValueError(f"tau must be in (0,1), got {tau}")
    if pred is None and gt is None:
        return FrameMatch(SKIP)
    if pred is None:
        return FrameMatch(FN)
    if gt is None:
        return FrameMatch(FP)
    overlap = iou(pred, gt)
    dist = center_distance(pred, gt)
    kind = TP if overlap >= tau else FP
    return FrameMatch(kind, iou=overlap, center_dist=dist)


def aggregate(matches: Iterable[FrameMatch]) -> EvalReport:
    """Reduce per-frame matches to precision/recall/F1, mean IOU, and OPE."""
    tp = fp = fn = 0
    ious: list[float] = []
    dists: list[float] = []
    absent = 0
    for m in matches:
        if m.kind == TP:
            tp += 1
        elif m.kind == FP:
            fp += 1
        elif m.kind == FN:
            fn += 1
        else:
            continue
        if m.iou is not None:
            ious.append(m.iou)
            dists.append(m.center_dist if m.center_dist is not None else 0.0)
        else:
            absent += 1

    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    mean_iou = sum(ious) / len(ious) if ious else 0.0
    ope = sum(dists) / len(dists) if dists else 0.0
    total = len(ious) + absent
    mean_iou_all = sum(ious) / total if total else 0.0
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1,
        mean_iou=mean_iou,
        ope=ope,
        frames_evaluated=len(ious),
        tp=tp,
        fp=fp,
        fn=fn,
        mean_iou_all=mean_iou_all,
    )


def evaluate_sequence(preds: Sequence[Optional[BBox]], gts: Sequence[Optional[BBox]],
                      tau: float = 0.5) -> EvalReport:
    """Convenience wrapper: classify frame-by-frame, then aggregate."""
    if len(preds) != len(gts):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(gts)} ground truths")
    return aggregate(classify_frame(p, g, tau) for p, g in zip(preds, gts))
