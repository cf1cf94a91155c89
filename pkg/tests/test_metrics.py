import random

import pytest

from handoff.boxes import BBox
from handoff.metrics import FN, FP, SKIP, TP, FrameMatch, aggregate, classify_frame, evaluate_sequence


def test_classify_missing_cases():
    gt = BBox(0, 0, 10, 10)
    assert classify_frame(None, gt).kind == FN
    assert classify_frame(gt, None).kind == FP
    assert classify_frame(None, None).kind == SKIP


def test_classify_exact_match():
    gt = BBox(0, 0, 10, 10)
    m = classify_frame(gt, gt, tau=0.5)
    assert m.kind == TP and m.iou == 1.0 and m.center_dist == 0.0


def test_classify_low_overlap_is_fp():
    # iou = 2*10 / (100+100-20) = 0.111..., below tau
    m = classify_frame(BBox(0, 0, 10, 10), BBox(8, 0, 10, 10), tau=0.5)
    assert m.kind == FP
    assert abs(m.iou - 2 / 18) < 1e-12


def test_classify_threshold_inclusive():
    # iou exactly 1/3 with tau=1/3 counts as TP
    m = classify_frame(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10), tau=50 / 150)
    assert m.kind == TP


def test_classify_bad_tau():
    with pytest.raises(ValueError):
        classify_frame(None, None, tau=0.0)
    with pytest.raises(ValueError):
        classify_frame(None, None, tau=1.0)


def test_bad_kind_rejected():
    with pytest.raises(ValueError):
        FrameMatch("NOPE")


def test_aggregate_reference_counts():
    # 81 hits, 19 misses: precision 1.00, recall 0.81, f1 ~0.8950
    matches = [FrameMatch(TP, iou=0.9, center_dist=3.0)] * 81 + [FrameMatch(FN)] * 19
    r = aggregate(matches)
    assert r.precision == 1.0
    assert abs(r.recall - 0.81) < 1e-12
    assert abs(r.f1 - 2 * 0.81 / 1.81) < 1e-12
    assert r.tp == 81 and r.fp == 0 and r.fn == 19
    assert r.frames_evaluated == 81
    assert abs(r.mean_iou - 0.9) < 1e-12
    assert abs(r.mean_iou_all - 0.9 * 81 / 100) < 1e-12


def test_aggregate_ope_constant():
    matches = [FrameMatch(TP, iou=0.8, center_dist=5.0)] * 3
    assert aggregate(matches).ope == 5.0


def test_aggregate_empty():
    r = aggregate([])
    assert (r.precision, r.recall, r.f1, r.mean_iou, r.ope) == (0, 0, 0, 0, 0)
    assert r.frames_evaluated == 0


def test_aggregate_skip_ignored():
    r = aggregate([FrameMatch(SKIP)] * 10 + [FrameMatch(TP, iou=1.0, center_dist=0.0)])
    assert r.precision == 1.0 and r.recall == 1.0 and r.frames_evaluated == 1


def test_aggregate_permutation_invariant():
    rng = random.Random(42)
    matches = []
    for _ in range(200):
        roll = rng.random()
        if roll < 0.5:
            matches.append(FrameMatch(TP, iou=rng.uniform(0.5, 1), center_dist=rng.uniform(0, 10)))
        elif roll < 0.7:
            matches.append(FrameMatch(FP, iou=rng.uniform(0, 0.5), center_dist=rng.uniform(5, 40)))
        elif roll < 0.9:
            matches.append(FrameMatch(FN))
        else:
            matches.append(FrameMatch(SKIP))
    base = aggregate(matches)
    for _ in range(5):
        rng.shuffle(matches)
        r = aggregate(matches)
        assert (r.tp, r.fp, r.fn, r.frames_evaluated) == (base.tp, base.fp, base.fn, base.frames_evaluated)
        # summation order may differ in the last ulp
        for field in ("precision", "recall", "f1", "mean_iou", "ope", "mean_iou_all"):
            assert abs(getattr(r, field) - getattr(base, field)) < 1e-9


def test_f1_properties():
    rng = random.Random(3)
    for _ in range(100):
        matches = [FrameMatch(TP, iou=1.0, center_dist=0.0)] * rng.randint(0, 30)
        matches += [FrameMatch(FP, iou=0.1, center_dist=9.0)] * rng.randint(0, 30)
        matches += [FrameMatch(FN)] * rng.randint(0, 30)
        r = aggregate(matches)
        assert 0 <= r.f1 <= 1
        if r.precision == r.recall and r.precision > 0:
            assert abs(r.f1 - r.precision) < 1e-12
        if r.precision + r.recall > 0:
            hm = 2 * r.precision * r.recall / (r.precision + r.recall)
            assert abs(r.f1 - hm) < 1e-12


def test_evaluate_sequence():
    gt = [BBox(i, 0, 10, 10) for i in range(10)]
    preds = list(gt)
    preds[3] = None
    r = evaluate_sequence(preds, gt)
    assert r.tp == 9 and r.fn == 1 and r.fp == 0
    with pytest.raises(ValueError):
        evaluate_sequence(preds[:5], gt)


def test_report_to_dict_keys():
    r = aggregate([FrameMatch(TP, iou=0.75, center_dist=2.0)])
    d = r.to_dict()
    assert d["precision"] == 1.0 and d["mean_iou"] == 0.75 and d["tp"] == 1
