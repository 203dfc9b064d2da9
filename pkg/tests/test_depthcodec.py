import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdcdrive.depthcodec import (decode_depth, depth_to_rgb_image, encode_depth,
                                 rgb_image_to_depth)

QUANTUM = 1000.0 / (256**3 - 1)


def test_zero_decodes_to_zero():
    assert decode_depth(0, 0, 0) == 0.0


def test_full_scale_decodes_to_max_range():
    assert decode_depth(255, 255, 255) == pytest.approx(1000.0, abs=1e-12)


def test_single_lsb():
    assert decode_depth(1, 0, 0) == pytest.approx(1000.0 / 16777215.0, rel=1e-12)


def test_encode_exact_values():
    assert encode_depth(0.0) == (0, 0, 0)
    assert encode_depth(1000.0) == (255, 255, 255)


def test_out_of_range_rejected():
    with pytest.raises(ValueError):
        encode_depth(-0.001)
    with pytest.raises(ValueError):
        encode_depth(1000.001)


@given(st.floats(min_value=0.0, max_value=1000.0, allow_nan=False))
def test_round_trip_within_quantum(d):
    r, g, b = encode_depth(d)
    assert abs(decode_depth(r, g, b) - d) <= QUANTUM


def test_encode_monotone_in_24bit_word():
    d = np.sort(np.random.default_rng(7).uniform(0.0, 1000.0, size=5000))
    r, g, b = encode_depth(d)
    words = r.astype(np.int64) + 256 * g.astype(np.int64) + 65536 * b.astype(np.int64)
    assert np.all(np.diff(words) >= 0)


def test_image_round_trip():
    rng = np.random.default_rng(3)
    depth = rng.uniform(0.0, 1000.0, size=(16, 16))
    img = depth_to_rgb_image(depth)
    assert img.dtype == np.uint8 and img.shape == (16, 16, 3)
    back = rgb_image_to_depth(img)
    assert np.max(np.abs(back - depth)) <= QUANTUM
