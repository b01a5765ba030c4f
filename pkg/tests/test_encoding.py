import numpy as np
from hypothesis import given, settings, strategies as st

from cuboidnet.encoding import (
    MAX_LOG_SCALE,
    box_center_size,
    clip_deltas,
    decode_box,
    decode_vertices,
    encode_box,
    encode_vertices,
)


def _random_boxes(rng, n):
    xy = rng.uniform(-200, 200, (n, 2))
    wh = rng.uniform(0.5, 300, (n, 2))
    return np.column_stack([xy, xy + wh])


def test_center_size_convention():
    cx, cy, w, h = box_center_size([2, 4, 12, 10])
    assert (cx, cy, w, h) == (7, 7, 10, 6)


def test_vertex_offsets_hand_cases():
    roi = np.array([0.0, 0.0, 100.0, 50.0])
    v = np.full((8, 2), [50.0, 25.0])
    np.testing.assert_array_equal(encode_vertices(v, roi), np.zeros(16))
    v[3] = [100.0, 50.0]
    v[5] = [75.0, 25.0]
    t = encode_vertices(v, roi).reshape(8, 2)
    np.testing.assert_array_equal(t[3], [0.5, 0.5])
    np.testing.assert_array_equal(t[5], [0.25, 0.0])


def test_decode_vertices_hand_cases():
    roi = np.array([10.0, 20.0, 30.0, 60.0])
    np.testing.assert_array_equal(decode_vertices(np.zeros(16), roi), np.tile([20.0, 40.0], (8, 1)))
    corners = np.tile([[-0.5, -0.5], [0.5, 0.5]], (4, 1)).ravel()
    out = decode_vertices(corners, roi)
    np.testing.assert_array_equal(out[0], [10, 20])
    np.testing.assert_array_equal(out[1], [30, 60])


def test_box_delta_hand_cases():
    ref = np.array([0.0, 0.0, 10.0, 10.0])
    np.testing.assert_array_equal(encode_box(ref, ref), np.zeros(4))
    np.testing.assert_allclose(encode_box([2, 2, 12, 12], ref), [0.2, 0.2, 0, 0], atol=1e-15)
    np.testing.assert_allclose(encode_box([0, 0, 20, 5], ref), [0.5, -0.25, np.log(2), np.log(0.5)])


def test_vertex_roundtrip_10k():
    rng = np.random.default_rng(0)
    rois = _random_boxes(rng, 10_000)
    verts = rng.uniform(-400, 400, (10_000, 8, 2))
    back = decode_vertices(encode_vertices(verts, rois), rois)
    assert np.max(np.abs(back - verts)) < 1e-9


def test_box_roundtrip_10k():
    rng = np.random.default_rng(1)
    a, b = _random_boxes(rng, 10_000), _random_boxes(rng, 10_000)
    back = decode_box(encode_box(a, b), b)
    assert np.max(np.abs(back - a)) < 1e-9


def test_batched_matches_single():
    rng = np.random.default_rng(2)
    rois = _random_boxes(rng, 5)
    verts = rng.uniform(0, 100, (5, 8, 2))
    batched = encode_vertices(verts, rois)
    for i in range(5):
        np.testing.assert_array_equal(batched[i], encode_vertices(verts[i], rois[i]))


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.floats(-100, 100), st.floats(-100, 100), st.floats(0.1, 10))
def test_vertex_encoding_invariant_to_translation_and_scale(seed, a, b, s):
    rng = np.random.default_rng(seed)
    roi = _random_boxes(rng, 1)[0]
    v = rng.uniform(-100, 100, (8, 2))
    base = encode_vertices(v, roi)
    np.testing.assert_allclose(encode_vertices(v + [a, b], roi + [a, b, a, b]), base, atol=1e-9)
    np.testing.assert_allclose(encode_vertices(v * s, roi * s), base, atol=1e-9)


def test_clip_deltas_caps_only_log_sizes():
    d = np.array([[100.0, -100.0, 50.0, -50.0]])
    out = clip_deltas(d)
    np.testing.assert_array_equal(out, [[100.0, -100.0, MAX_LOG_SCALE, -50.0]])
    assert d[0, 2] == 50.0  # input untouched
    assert np.all(np.isfinite(decode_box(out, [0, 0, 10, 10])))
