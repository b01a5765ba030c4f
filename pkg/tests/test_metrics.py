import csv
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cuboidnet import metrics
from cuboidnet.errors import CountMismatch
from cuboidnet.geometry import FACES
from metric_cases import (
    EXACT,
    as_detections,
    check_detection_instance,
    check_keypoint_instance,
    keypoint_instance,
    random_instance,
)
from oracles import (
    exact_ap,
    face_members,
    raster_iou,
    voc_match,
)

boxes_st = st.tuples(st.integers(0, 20), st.integers(0, 20), st.integers(1, 12), st.integers(1, 12)).map(
    lambda t: np.array([t[0], t[1], t[0] + t[2], t[1] + t[3]], dtype=float))


def Det(score, box, cuboid=None):
    from types import SimpleNamespace
    return SimpleNamespace(score=score, box=np.asarray(box, float),
                           cuboid=np.zeros((8, 2)) if cuboid is None else cuboid)


# --- IoU --------------------------------------------------------------------------


def test_iou_hand_case_is_one_third():
    a, b = [0, 0, 10, 10], [5, 0, 15, 10]
    assert raster_iou(a, b) == Fraction(1, 3)
    assert metrics.iou(a, b) == pytest.approx(1 / 3, abs=EXACT)


def test_iou_trivial_cases():
    assert metrics.iou([0, 0, 4, 4], [0, 0, 4, 4]) == 1.0
    assert metrics.iou([0, 0, 4, 4], [5, 5, 9, 9]) == 0.0
    assert metrics.iou([0, 0, 4, 4], [4, 0, 8, 4]) == 0.0  # touching edges


@settings(max_examples=200, deadline=None)
@given(boxes_st, boxes_st)
def test_iou_matches_rasterization(a, b):
    want = float(raster_iou(a, b))
    assert metrics.iou(a, b) == pytest.approx(want, abs=EXACT)
    assert metrics.iou(b, a) == pytest.approx(want, abs=EXACT)
    assert metrics.iou_matrix(a, b)[0, 0] == pytest.approx(want, abs=EXACT)


# --- matching and AP ----------------------------------------------------------------


def test_single_match_is_tp():
    tp, m = metrics.match_detections([[0, 0, 10, 10]], [0.9], np.array([[0, 0, 10, 12]]))
    assert tp.tolist() == [True] and m.tolist() == [0]


def test_duplicate_detection_is_fp():
    tp, _ = metrics.match_detections([[0, 0, 10, 10], [0, 0, 10, 10]], [0.9, 0.8], np.array([[0, 0, 10, 10]]))
    assert tp.tolist() == [True, False]


def test_iou_exactly_half_is_not_a_match():
    # IoU of these is exactly 1/2; the rule is strictly greater
    assert metrics.iou([0, 0, 10, 10], [0, 0, 10, 5]) == 0.5
    tp, _ = metrics.match_detections([[0, 0, 10, 5]], [1.0], np.array([[0, 0, 10, 10]]))
    assert not tp[0]


def test_ties_break_by_input_order():
    boxes = [[0, 0, 10, 10], [0, 0, 10, 10]]
    tp, _ = metrics.match_detections(boxes, [0.5, 0.5], np.array([[0, 0, 10, 10]]))
    assert tp.tolist() == [True, False]


def test_ap_hand_case_is_five_sixths():
    assert exact_ap([True, False, True], 2) == Fraction(5, 6)
    assert metrics.average_precision([True, False, True], 2) == pytest.approx(5 / 6, abs=EXACT)


def test_ap_trivial_cases():
    assert metrics.average_precision([True], 1) == 1.0
    assert metrics.average_precision([False, False], 3) == 0.0
    assert metrics.average_precision([], 3) == 0.0
    assert metrics.average_precision([True], 0) == 0.0


def test_ap_ranks_by_score_when_given():
    assert metrics.average_precision([True, False, True], 2, scores=[0.9, 0.1, 0.8]) == 1.0


def test_pr_curve_one_point_per_distinct_threshold():
    curve = metrics.pr_curve([True, False, True, True], 4, [0.9, 0.5, 0.5, 0.1])
    np.testing.assert_allclose(curve.thresholds, [0.9, 0.5, 0.1])
    np.testing.assert_allclose(curve.recall, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(curve.precision, [1.0, 2 / 3, 0.75])


@pytest.mark.parametrize("seed", range(50))
def test_matching_equals_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    dets, gts = random_instance(rng)
    for d_img, g_img in zip(dets, gts):
        boxes = [d[1] for d in d_img]
        scores = [d[0] for d in d_img]
        gboxes = np.array([g[0] for g in g_img]).reshape(-1, 4)
        tp, matched = metrics.match_detections(np.array(boxes).reshape(-1, 4), scores, gboxes)
        want_tp, want_m = voc_match(boxes, scores, list(gboxes))
        assert tp.tolist() == want_tp
        assert matched.tolist() == want_m


# --- oracle equivalence on random instances ---------------------------------------


@pytest.mark.parametrize("seed", range(100))
def test_detection_metrics_equal_exhaustive_reference(seed):
    assert check_detection_instance(np.random.default_rng(seed))


@pytest.mark.parametrize("seed", range(100))
def test_keypoint_metrics_equal_exhaustive_reference(seed):
    assert check_keypoint_instance(np.random.default_rng(seed))


def test_face_membership_follows_the_labels():
    assert {k: set(v) for k, v in FACES.items()} == {k: set(v) for k, v in face_members().items()}


# --- PCK ------------------------------------------------------------------------------


def test_pck_one_of_sixteen():
    boxes = np.array([[0, 0, 10, 10], [0, 0, 20, 10]], dtype=float)
    gt = np.zeros((2, 8, 2))
    pred = gt + 50.0
    pred[1, 3] = gt[1, 3] + [1.5, 0.0]  # threshold for instance 1 is 2 px
    p, per = metrics.pck(boxes, gt, pred)
    assert p == pytest.approx(1 / 16, abs=EXACT)
    assert per[3] == 0.5 and per.sum() == 0.5


def test_pck_threshold_is_inclusive():
    boxes = np.array([[0, 0, 50, 20]], dtype=float)
    gt = np.zeros((1, 8, 2))
    pred = gt + [3.0, 4.0]  # distance 5 = 0.1 * 50
    assert metrics.pck(boxes, gt, pred)[0] == 1.0
    assert metrics.pck(boxes, gt, pred + [0.001, 0.0])[0] == 0.0


def test_pck_perfect_and_count_mismatch():
    boxes = np.array([[0, 0, 10, 10]], dtype=float)
    gt = np.ones((1, 8, 2))
    assert metrics.pck(boxes, gt, gt)[0] == 1.0
    with pytest.raises(CountMismatch):
        metrics.pck(boxes, gt, np.ones((2, 8, 2)))


def test_one_bad_vertex_drops_exactly_three_faces():
    boxes = np.array([[0, 0, 10, 10]], dtype=float)
    gt = np.zeros((1, 8, 2))
    for k in range(8):
        pred = gt.copy()
        pred[0, k] = [9.0, 9.0]
        faces = metrics.face_pck(boxes, gt, pred)
        bad = {f for f, v in faces.items() if v == 0.0}
        assert len(bad) == 3 and all(k in FACES[f] for f in bad)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_pck_sweep_is_monotone_and_matches_pointwise(seed):
    boxes, gt, pred = keypoint_instance(np.random.default_rng(seed))
    alphas = np.linspace(0, 0.5, 11)
    sweep = metrics.pck_sweep(boxes, gt, pred, alphas)
    assert np.all(np.diff(sweep) >= 0)
    if len(boxes):
        for a, v in zip(alphas, sweep):
            assert v == metrics.pck(boxes, gt, pred, a)[0]
        assert metrics.pck_sweep(boxes, gt, pred, [1e6])[0] == 1.0


def test_pck_sweep_at_zero_counts_exact_hits():
    boxes = np.array([[0, 0, 10, 10]], dtype=float)
    gt = np.zeros((1, 8, 2))
    pred = gt.copy()
    pred[0, :3] += 1.0
    assert metrics.pck_sweep(boxes, gt, pred, [0.0])[0] == 5 / 8


# --- APK ------------------------------------------------------------------------------


def test_apk_perfect_and_all_keypoints_off():
    box = np.array([0, 0, 10, 10], dtype=float)
    cub = np.arange(16.0).reshape(8, 2)
    gts = [[(box, cub)]]
    assert metrics.apk([[Det(0.9, box, cub)]], gts)[0] == 1.0
    mean, per = metrics.apk([[Det(0.9, box, cub + 5.0)]], gts)
    assert mean == 0.0 and not per.any()


@pytest.mark.parametrize("seed", range(30))
def test_apk_never_exceeds_box_ap(seed):
    dets, gts = random_instance(np.random.default_rng(seed))
    ds = as_detections(dets)
    ap = metrics.detection_ap(ds, gts)
    _, per = metrics.apk(ds, gts)
    assert np.all(per <= ap + EXACT)


@pytest.mark.parametrize("seed", range(30))
def test_metrics_invariant_under_permutation(seed):
    rng = np.random.default_rng(seed)
    dets, gts = random_instance(rng)
    # distinct scores so the ranking is unambiguous
    dets = [[(s + 1e-3 * rng.random(), b, c) for s, b, c in img] for img in dets]
    shuffled = [[img[i] for i in rng.permutation(len(img))] for img in dets]
    a, b = as_detections(dets), as_detections(shuffled)
    assert metrics.detection_ap(a, gts) == pytest.approx(metrics.detection_ap(b, gts), abs=EXACT)
    np.testing.assert_allclose(metrics.apk(a, gts)[1], metrics.apk(b, gts)[1], atol=EXACT)


def test_metrics_are_bounded():
    for seed in range(20):
        dets, gts = random_instance(np.random.default_rng(seed))
        ds = as_detections(dets)
        assert 0.0 <= metrics.detection_ap(ds, gts) <= 1.0
        assert 0.0 <= metrics.apk(ds, gts)[0] <= 1.0


def test_image_count_mismatch():
    with pytest.raises(CountMismatch):
        metrics.detection_ap([[]], [[], []])


# --- CSV output -------------------------------------------------------------------------


def test_pr_csv_has_header_plus_one_row_per_threshold(tmp_path):
    scores = [0.9, 0.5, 0.5, 0.1, 0.1]
    curve = metrics.pr_curve([True, False, True, True, False], 4, scores)
    path = tmp_path / "pr.csv"
    metrics.write_pr_csv(path, curve)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["recall", "precision"]
    assert len(rows) == len(set(scores)) + 1


def test_pck_csv_six_significant_digits(tmp_path):
    path = tmp_path / "pck.csv"
    metrics.write_pck_csv(path, [0.1, 0.2], [1 / 3, 2 / 3])
    rows = list(csv.reader(open(path)))
    assert rows == [["alpha", "pck"], ["0.1", "0.333333"], ["0.2", "0.666667"]]
