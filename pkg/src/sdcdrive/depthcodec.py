"""24-bit RGB depth encoding.

A range value in [0, 1000] meters is stored across three 8-bit channels.
Decoding is exact: depth = (R + 256*G + 256^2*B) / (256^3 - 1) * 1000.
Encoding rounds to the nearest representable code, so a round trip is
accurate to within one quantization step (1000 / (2^24 - 1) meters).
"""

from __future__ import annotations

import numpy as np

MAX_RANGE_M = 1000.0
_FULL_SCALE = 256**3 - 1  # 16777215


def encode_depth(depth_m):
    """Encode depth in meters to (R, G, B) uint8 channels.

    Accepts a scalar or array. Raises ValueError for values outside
    [0, 1000].
    """
    d = np.asarray(depth_m, dtype=np.float64)
    if np.any(d < 0.0) or np.any(d > MAX_RANGE_M):
        raise ValueError("depth out of range [0, 1000] m")
    code = np.floor(d / MAX_RANGE_M * _FULL_SCALE + 0.5).astype(np.int64)
    r = (code & 0xFF).astype(np.uint8)
    g = ((code >> 8) & 0xFF).astype(np.uint8)
    b = ((code >> 16) & 0xFF).astype(np.uint8)
    if np.ndim(depth_m) == 0:
        return int(r), int(g), int(b)
    return r, g, b


def decode_depth(r, g, b):
    """Decode (R, G, B) uint8 channels back to meters."""
    code = (np.asarray(r, dtype=np.float64)
            + 256.0 * np.asarray(g, dtype=np.float64)
            + 65536.0 * np.asarray(b, dtype=np.float64))
    out = code / _FULL_SCALE * MAX_RANGE_M
    if np.ndim(r) == 0:
        return float(out)
    return out


def depth_to_rgb_image(depth: np.ndarray) -> np.ndarray:
    """Encode a (H, W) depth map into an (H, W, 3) uint8 image."""
    r, g, b = encode_depth(depth)
    return np.stack([r, g, b], axis=-1)


def rgb_image_to_depth(img: np.ndarray) -> np.ndarray:
    """Decode an (H, W, 3) uint8 image back into a (H, W) depth map."""
    return decode_depth(img[..., 0], img[..., 1], img[..., 2])
