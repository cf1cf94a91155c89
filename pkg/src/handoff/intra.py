"""Per-camera tracking state machine.

Two phases. Acquiring: sweep the frame's detections for the target by
appearance and start the correlation filter on the match. Tracking: predict
with the filter, fuse with detections through an IOU gate, watch for
occlusion (several rival detections overlapping the prediction) and for
exit (an all-zero overlap vector several frames running).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .boxes import BBox, iou
from .cftracker import FilterModel, FilterParams, cf_init, cf_update
from .perception import (AppearanceVector, Detection, FrameView, detect_persons, embed,
                         perform_reid)

ACQUIRING = "acquiring"
TRACKING = "tracking"

REACQUIRED = "reacquired"
TRACKING_OK = "tracking"
LOW_CONFIDENCE = "low_confidence"
OCCLUSION = "occlusion"
ACQUIRING_FAILED = "acquiring_failed"
EXITED = "exited"


@dataclass(frozen=True)
class IntraConfig:
    iou_threshold: float = 0.30
    occlusion_min_iou: float = 0.10
    exit_zero_frames: int = 3
    # -1 accepts the appearance argmax unconditionally during reacquisition
    reid_s_min: float = -1.0
    # ablation switch: with the module off, crowded overlaps never trigger
    # reacquisition and the best detection is trusted unconditionally
    occlusion_module: bool = True
    cf_params: FilterParams = field(default_factory=FilterParams)

    def __post_init__(self):
        if not 0 <= self.iou_threshold <= 1:
            raise ValueError(f"iou_threshold out of range: {self.iou_threshold}")
        if not 0 <= self.occlusion_min_iou <= 1:
            raise ValueError(f"occlusion_min_iou out of range: {self.occlusion_min_iou}")
        if self.occlusion_min_iou >= self.iou_threshold:
            raise ValueError("occlusion_min_iou must be below iou_threshold")
        if self.exit_zero_frames < 1:
            raise ValueError("exit_zero_frames must be at least 1")
        if not -1 <= self.reid_s_min <= 1:
            raise ValueError(f"reid_s_min out of range: {self.reid_s_min}")


@dataclass
class IntraState:
    config: IntraConfig = field(default_factory=IntraConfig)
    phase: str = ACQUIRING
    model: Optional[FilterModel] = None
    last_box: Optional[BBox] = None
    zero_streak: int = 0


@dataclass(frozen=True)
class IntraStepResult:
    kind: str
    box: Optional[BBox] = None
    peak: Optional[float] = None


def apply_iou_constraint(dets: Sequence[Detection], predicted: BBox
                         ) -> tuple[list[float], Optional[int]]:
    """Overlap of each detection with the prediction; argmax ties go low."""
    vector = [iou(d.bbox, predicted) for d in dets]
    if not vector:
        return [], None
    best = 0
    for i, v in enumerate(vector):
        if v > vector[best]:
            best = i
    return vector, best


def detect_occlusion(iou_vector: Sequence[float], min_iou: float = 0.10) -> bool:
    """True when more than one non-best detection still overlaps the target.

    Entries equal to the maximum are excluded, duplicates of the maximum
    included; remaining entries count if strictly above min_iou.
    """
    if not iou_vector:
        return False
    m = max(iou_vector)
    count = sum(1 for v in iou_vector if v > min_iou and v != m)
    return count > 1


def _embeddable(det: Detection, frame_w: int, frame_h: int) -> bool:
    clipped = det.bbox.clipped(frame_w, frame_h)
    return clipped.area > 0


def intra_step(state: IntraState, frame: FrameView, detector, embedder,
               target_features: AppearanceVector) -> tuple[IntraState, IntraStepResult]:
    cfg = state.config
    dets = detect_persons(detector, frame.camera_id, frame.frame_index, frame.pixels)
    h, w = frame.pixels.shape[:2]

    if state.phase == ACQUIRING:
        usable = [d for d in dets if _embeddable(d, w, h)]
        if not usable:
            return state, IntraStepResult(ACQUIRING_FAILED)
        vectors = [embed(frame.pixels, d.bbox, embedder) for d in usable]
        match = perform_reid(vectors, target_features, cfg.reid_s_min)
        if match is None:
            return state, IntraStepResult(ACQUIRING_FAILED)
        box = usable[match].bbox
        model = cf_init(frame.pixels, box, cfg.cf_params)
        new_state = replace(state, phase=TRACKING, model=model, last_box=box, zero_streak=0)
        return new_state, IntraStepResult(REACQUIRED, box=box)

    if state.model is None:
        raise ValueError("tracking phase requires an initialized filter model")

    predicted, peak = cf_update(state.model, frame.pixels)
    iou_vector, best = apply_iou_constraint(dets, predicted)
    max_iou = max(iou_vector) if iou_vector else 0.0

    if best is not None and max_iou >= cfg.iou_threshold:
        if cfg.occlusion_module and detect_occlusion(iou_vector, cfg.occlusion_min_iou):
            new_state = replace(state, phase=ACQUIRING, model=None, zero_streak=0)
            return new_state, IntraStepResult(OCCLUSION, peak=peak)
        box = dets[best].bbox
        model = cf_init(frame.pixels, box, cfg.cf_params)
        new_state = replace(state, model=model, last_box=box, zero_streak=0)
        return new_state, IntraStepResult(TRACKING_OK, box=box, peak=peak)

    if max_iou == 0.0:
        streak = min(state.zero_streak + 1, cfg.exit_zero_frames)
        if streak >= cfg.exit_zero_frames:
            return replace(state, zero_streak=streak), IntraStepResult(EXITED, peak=peak)
        new_state = replace(state, zero_streak=streak, last_box=predicted)
        return new_state, IntraStepResult(LOW_CONFIDENCE, box=predicted, peak=peak)

    # some overlap but below the gate: keep the filter's prediction, do not
    # retrain, and leave the exit streak untouched
    new_state = replace(state, last_box=predicted)
    return new_state, IntraStepResult(LOW_CONFIDENCE, box=predicted, peak=peak)
