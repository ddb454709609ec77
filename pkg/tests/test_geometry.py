import math

import numpy as np
import pytest

from src.core.exceptions import ConfigurationError, DomainError
from src.services.geometry import (
    DetectedObject,
    SpatialLabel,
    complement_label,
    geometry_feature,
    image_diagonal,
    iou,
    octant,
    pairwise_geometry_features,
    sinusoidal_embed,
    spatial_classify,
    union_box,
)

DIAG = image_diagonal(200.0, 100.0)


def test_detected_object_rejects_degenerate_boxes():
    with pytest.raises(DomainError):
        DetectedObject(0.0, 0.0, 0.0, 1.0)


def test_iou_identical_and_disjoint():
    a = DetectedObject(10.0, 10.0, 4.0, 4.0)
    assert iou(a, a) == 1.0
    assert iou(a, DetectedObject(50.0, 50.0, 4.0, 4.0)) == 0.0


def test_union_box_covers_both():
    u = union_box(DetectedObject(10.0, 10.0, 4.0, 4.0), DetectedObject(20.0, 12.0, 2.0, 8.0))
    assert (u.x1, u.y1, u.x2, u.y2) == (8.0, 8.0, 21.0, 16.0)


def test_geometry_feature_of_identical_boxes():
    o = DetectedObject(5.0, 5.0, 2.0, 4.0)
    g = geometry_feature(o, o)
    assert g[0] == pytest.approx(math.log(1e-3 / 2.0))
    assert g[1] == pytest.approx(math.log(1e-3 / 4.0))
    assert g[2] == 0.0 and g[3] == 0.0


def test_geometry_feature_is_asymmetric():
    a = DetectedObject(0.0, 0.0, 2.0, 2.0)
    b = DetectedObject(4.0, 4.0, 8.0, 8.0)
    assert not np.allclose(geometry_feature(a, b), geometry_feature(b, a))


def test_geometry_feature_worked_example():
    g = geometry_feature(DetectedObject(5.0, 5.0, 10.0, 10.0), DetectedObject(15.0, 15.0, 20.0, 20.0))
    np.testing.assert_allclose(g, [0.0, 0.0, math.log(2.0), math.log(2.0)], atol=1e-15)


def test_iou_of_half_overlapping_boxes():
    a = DetectedObject(5.0, 5.0, 10.0, 10.0)
    b = DetectedObject(10.0, 5.0, 10.0, 10.0)
    assert iou(a, b) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert iou(b, a) == iou(a, b)


def test_union_box_of_separate_boxes():
    u = union_box(DetectedObject(5.0, 5.0, 10.0, 10.0), DetectedObject(25.0, 25.0, 10.0, 10.0))
    assert (u.cx, u.cy, u.w, u.h) == (15.0, 15.0, 30.0, 30.0)


def test_geometry_feature_ignores_translation_and_scale():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        # quarter-pixel grid with dyadic scales keeps moved offsets exact
        cx, cy = rng.choice(400, size=(2, 2), replace=False) / 4.0
        sizes = rng.uniform(1.0, 50.0, size=(2, 2))
        a = DetectedObject(cx[0], cy[0], *sizes[0])
        b = DetectedObject(cx[1], cy[1], *sizes[1])
        s = rng.integers(2, 17) / 4.0
        tx, ty = rng.integers(-100, 101, size=2)

        def moved(o):
            return DetectedObject(s * o.cx + tx, s * o.cy + ty, s * o.w, s * o.h)

        np.testing.assert_allclose(geometry_feature(moved(a), moved(b)), geometry_feature(a, b), rtol=0, atol=1e-12)


def test_pairwise_matches_scalar(scattered_objects):
    grid = pairwise_geometry_features(scattered_objects)
    assert grid.shape == (4, 4, 4)
    for i, a in enumerate(scattered_objects):
        for j, b in enumerate(scattered_objects):
            np.testing.assert_allclose(grid[i, j], geometry_feature(a, b), rtol=1e-12, atol=1e-15)


def test_sinusoidal_embed_of_zero():
    out = sinusoidal_embed(np.zeros(4), d_g=16)
    assert out.shape == (16,)
    np.testing.assert_array_equal(out[0::2], 0.0)
    np.testing.assert_array_equal(out[1::2], 1.0)


def test_sinusoidal_embed_is_bounded(rng):
    out = sinusoidal_embed(rng.normal(scale=10.0, size=(3, 3, 4)), d_g=64)
    assert out.shape == (3, 3, 64)
    assert np.abs(out).max() <= 1.0


def test_sinusoidal_embed_layout():
    g = np.array([0.5, 0.0, 0.0, 0.0])
    out = sinusoidal_embed(g, d_g=16, base=1000.0)
    # component 0, frequencies k = 0 and k = 1
    assert out[0] == pytest.approx(math.sin(0.5))
    assert out[1] == pytest.approx(math.cos(0.5))
    assert out[2] == pytest.approx(math.sin(0.5 / 1000.0 ** 0.5))


def test_sinusoidal_embed_quarter_turn():
    out = sinusoidal_embed(np.array([math.pi / 2.0, 0.0, 0.0, 0.0]), d_g=8)
    assert out[0] == pytest.approx(1.0, abs=1e-15)
    assert out[1] == pytest.approx(6.123233995736766e-17, abs=1e-30)


def test_sinusoidal_embed_rejects_bad_width():
    with pytest.raises(ConfigurationError):
        sinusoidal_embed(np.zeros(4), d_g=12)


@pytest.mark.parametrize(
    "dx, dy, expected",
    [
        (1.0, 0.0, 0),
        (1.0, 1.0, 1),
        (0.0, 1.0, 2),
        (-1.0, 1.0, 3),
        (-1.0, 0.0, 4),
        (-1.0, -1.0, 5),
        (0.0, -1.0, 6),
        (1.0, -1.0, 7),
        (1.0, -0.1, 0),
    ],
)
def test_octant(dx, dy, expected):
    assert octant(dx, dy) == expected


def test_octants_of_opposite_offsets_are_four_apart(rng):
    for dx, dy in rng.normal(size=(200, 2)):
        assert (octant(dx, dy) + 4) % 8 == octant(-dx, -dy)


def test_inside_and_cover():
    outer = DetectedObject(50.0, 50.0, 60.0, 60.0)
    inner = DetectedObject(50.0, 50.0, 20.0, 20.0)
    assert spatial_classify(inner, outer, DIAG) == SpatialLabel.INSIDE
    assert spatial_classify(outer, inner, DIAG) == SpatialLabel.COVER


def test_identical_boxes_overlap():
    a = DetectedObject(30.0, 30.0, 10.0, 10.0)
    assert spatial_classify(a, a, DIAG) == SpatialLabel.OVERLAP


def test_right_neighbour_is_angle_zero():
    a = DetectedObject(10.0, 50.0, 10.0, 10.0)
    b = DetectedObject(40.0, 50.0, 10.0, 10.0)
    assert spatial_classify(a, b, DIAG) == SpatialLabel.ANGLE_0
    assert spatial_classify(b, a, DIAG) == SpatialLabel.ANGLE_180


def test_far_boxes_have_no_relation():
    a = DetectedObject(5.0, 5.0, 4.0, 4.0)
    b = DetectedObject(195.0, 95.0, 4.0, 4.0)
    assert spatial_classify(a, b, DIAG) == SpatialLabel.NO_RELATION


def test_coincident_centers_without_overlap_threshold():
    wide = DetectedObject(50.0, 50.0, 40.0, 2.0)
    tall = DetectedObject(50.0, 50.0, 2.0, 40.0)
    assert spatial_classify(wide, tall, DIAG) == SpatialLabel.OVERLAP


def test_classification_pairs_are_complements(rng):
    for _ in range(300):
        a = DetectedObject(*rng.uniform(0, 100, 2), *rng.uniform(1, 50, 2))
        b = DetectedObject(*rng.uniform(0, 100, 2), *rng.uniform(1, 50, 2))
        forward = spatial_classify(a, b, DIAG)
        backward = spatial_classify(b, a, DIAG)
        if forward == SpatialLabel.NO_RELATION:
            assert backward == SpatialLabel.NO_RELATION
        else:
            assert backward == complement_label(forward)


def test_complement_is_an_involution():
    for label in SpatialLabel.relation_labels():
        assert complement_label(complement_label(label)) == label
    with pytest.raises(DomainError):
        complement_label(SpatialLabel.NO_RELATION)


def test_label_names_round_trip():
    assert SpatialLabel.ANGLE_225.label_name == "angle_225"
    assert SpatialLabel.ANGLE_135.label_name == "angle_135"
    assert SpatialLabel.from_name("cover") == SpatialLabel.COVER
    assert SpatialLabel.from_name("no_relation") == SpatialLabel.NO_RELATION
    assert all(SpatialLabel.from_name(label.label_name) == label for label in SpatialLabel)
    with pytest.raises(DomainError):
        SpatialLabel.from_name("beside")
