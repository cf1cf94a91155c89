import math
import random

import pytest

from handoff.boxes import BBox, center_distance, intersection_area, iou


def pixel_iou(a: BBox, b: BBox) -> float:
    # Brute-force oracle: enumerate unit grid cells covered by each box.
    # Only valid for integer-coordinate boxes.
    cells_a = {(x, y) for x in range(int(a.x), int(a.x2)) for y in range(int(a.y), int(a.y2))}
    cells_b = {(x, y) for x in range(int(b.x), int(b.x2)) for y in range(int(b.y), int(b.y2))}
    union = cells_a | cells_b
    if not union:
        return 0.0
    return len(cells_a & cells_b) / len(union)


def test_identical_boxes():
    a = BBox(0, 0, 10, 10)
    assert iou(a, a) == 1.0


def test_disjoint_boxes():
    assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 5, 5)) == 0.0


def test_half_overlap():
    v = iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10))
    assert abs(v - 50 / 150) < 1e-12


def test_zero_area_boxes():
    z = BBox(5, 5, 0, 0)
    assert iou(z, z) == 0.0
    assert iou(z, BBox(0, 0, 10, 10)) == 0.0


def test_negative_size_rejected():
    with pytest.raises(ValueError):
        BBox(0, 0, -1, 5)
    with pytest.raises(ValueError):
        BBox(0, 0, 5, float("nan"))


def test_iou_against_pixel_oracle():
    rng = random.Random(1234)
    for _ in range(1000):
        a = BBox(rng.randint(0, 60), rng.randint(0, 60), rng.randint(0, 40), rng.randint(0, 40))
        b = BBox(rng.randint(0, 60), rng.randint(0, 60), rng.randint(0, 40), rng.randint(0, 40))
        assert abs(iou(a, b) - pixel_iou(a, b)) <= 1e-9


def test_iou_symmetric_and_bounded():
    rng = random.Random(99)
    for _ in range(300):
        a = BBox(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 30), rng.uniform(0, 30))
        b = BBox(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 30), rng.uniform(0, 30))
        v = iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == iou(b, a)


def test_iou_one_only_for_identical():
    a = BBox(0, 0, 10, 10)
    b = BBox(0, 0, 10, 10.0001)
    assert iou(a, b) < 1.0


def test_translation_invariance():
    rng = random.Random(7)
    for _ in range(200):
        a = BBox(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30), rng.uniform(1, 30))
        b = BBox(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30), rng.uniform(1, 30))
        dx, dy = rng.uniform(-100, 100), rng.uniform(-100, 100)
        at, bt = a.translated(dx, dy), b.translated(dx, dy)
        assert abs(iou(a, b) - iou(at, bt)) < 1e-9
        assert abs(center_distance(a, b) - center_distance(at, bt)) < 1e-9


def test_center_distance():
    a = BBox(-1, -1, 2, 2)  # center (0,0)
    b = BBox(2, 3, 2, 2)    # center (3,4)
    assert abs(center_distance(a, b) - 5.0) < 1e-12
    assert center_distance(a, a) == 0.0
    assert abs(center_distance(BBox(0, 0, 2, 2), BBox(10, 0, 2, 2)) - 10.0) < 1e-12


def test_intersection_area():
    assert intersection_area(BBox(0, 0, 10, 10), BBox(5, 5, 10, 10)) == 25.0
    assert intersection_area(BBox(0, 0, 10, 10), BBox(10, 0, 5, 5)) == 0.0


def test_clipped():
    b = BBox(-5, -5, 20, 20).clipped(12, 8)
    assert (b.x, b.y, b.w, b.h) == (0, 0, 12, 8)
    outside = BBox(100, 100, 5, 5).clipped(50, 50)
    assert outside.area == 0.0


def test_properties():
    b = BBox(2, 3, 4, 6)
    assert b.center == (4.0, 6.0)
    assert b.x2 == 6 and b.y2 == 9
    assert b.area == 24
    assert b.to_dict() == {"x": 2, "y": 3, "w": 4, "h": 6}
    assert math.isclose(b.translated(1, -1).y, 2)
