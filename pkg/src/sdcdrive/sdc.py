"""Semantic depth cloud mapping.

Projects per-pixel (class, range) readings from the front camera into a
one-hot 23x256x256 bird's-eye-view occupancy grid. Coverage is 64 m
forward and 32 m to each side (0.25 m per cell), ego anchored at the
bottom-center cell (row 255, column 128).

Rounding throughout is round-half-up, implemented as floor(x + 0.5), so
cell indices are reproducible bit-exactly.
"""

from __future__ import annotations

import numpy as np

NUM_CLASSES = 23
GRID = 256
SKY_CLASS = 13
COVERAGE_FORWARD_M = 64.0
COVERAGE_LATERAL_M = 32.0
METERS_PER_CELL = 0.25
EGO_CELL = (255, 128)  # (row, col)


class ProjectionTable:
    """Per-column lateral factors (u - c_x) / f_x for a 256-wide image."""

    def __init__(self, fx: float = 128.0, cx: float = 127.5, width: int = GRID):
        if fx <= 0.0:
            raise ValueError("focal length must be positive")
        self.fx = float(fx)
        self.cx = float(cx)
        self.values = (np.arange(width, dtype=np.float64) - self.cx) / self.fx


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5).astype(np.int64)


def compute_px(depth: np.ndarray, table: ProjectionTable):
    """Column indices for every pixel, with an in-range validity mask.

    px = round((depth * t_x + 32) / 64 * 255); columns outside [0, 255]
    are flagged invalid rather than clamped.
    """
    d = np.asarray(depth, dtype=np.float64)
    lateral = d * table.values[None, :]
    px = _round_half_up((lateral + COVERAGE_LATERAL_M) / 64.0 * 255.0)
    valid = (px >= 0) & (px <= GRID - 1)
    return px, valid


def compute_pz(depth: np.ndarray):
    """Row indices for every pixel, with an in-range validity mask.

    pz = round((1 - depth / 64) * 255); the image is mirrored so that
    depth 0 lands on the bottom row. Depths beyond 64 m fall off the top
    and are flagged invalid.
    """
    d = np.asarray(depth, dtype=np.float64)
    pz = _round_half_up((1.0 - d / COVERAGE_FORWARD_M) * 255.0)
    valid = (pz >= 0) & (pz <= GRID - 1)
    return pz, valid


def project_sdc(semantic: np.ndarray, depth: np.ndarray,
                table: ProjectionTable | None = None) -> np.ndarray:
    """Build the one-hot (23, 256, 256) BEV tensor from aligned images.

    Sky pixels are never projected. When several pixels land in the same
    cell, the one highest in the image wins: the minimum (row, column)
    pair in lexicographic order, which makes the result independent of
    visitation order.
    """
    sem = np.asarray(semantic)
    d = np.asarray(depth, dtype=np.float64)
    if sem.shape != d.shape or sem.shape != (GRID, GRID):
        raise ValueError("semantic and depth must both be 256x256")
    if table is None:
        table = ProjectionTable()

    px, px_ok = compute_px(d, table)
    pz, pz_ok = compute_pz(d)
    keep = px_ok & pz_ok & (sem != SKY_CLASS)

    sdc = np.zeros((NUM_CLASSES, GRID, GRID), dtype=np.uint8)
    if not np.any(keep):
        return sdc

    # Flattening in C order enumerates pixels by ascending (row, col), so
    # the first hit per cell is exactly the lexicographic minimum.
    flat_keep = keep.ravel()
    cell = (pz.ravel()[flat_keep] * GRID + px.ravel()[flat_keep])
    classes = sem.ravel()[flat_keep]
    _, first = np.unique(cell, return_index=True)
    win_cell = cell[first]
    win_class = classes[first].astype(np.int64)
    sdc[win_class, win_cell // GRID, win_cell % GRID] = 1
    return sdc


def local_point_to_cell(x_l: float, y_l: float) -> tuple[int, int]:
    """Map a local-frame point (right, forward) in meters to (row, col)."""
    col = int(np.floor((x_l + COVERAGE_LATERAL_M) / 64.0 * 255.0 + 0.5))
    row = int(np.floor((1.0 - y_l / COVERAGE_FORWARD_M) * 255.0 + 0.5))
    return row, col


_PALETTE = np.array([
    (0, 0, 0), (70, 70, 70), (100, 40, 40), (55, 90, 80), (220, 20, 60),
    (153, 153, 153), (157, 234, 50), (128, 64, 128), (244, 35, 232),
    (107, 142, 35), (0, 0, 142), (102, 102, 156), (220, 220, 0),
    (70, 130, 180), (81, 0, 81), (150, 100, 100), (230, 150, 140),
    (180, 165, 180), (250, 170, 30), (110, 190, 160), (170, 120, 50),
    (45, 60, 150), (145, 170, 100),
], dtype=np.uint8)


def class_palette() -> np.ndarray:
    """RGB color per semantic class id, shape (23, 3)."""
    return _PALETTE.copy()


def _disk_mask(shape, center, radius: float) -> np.ndarray:
    rr, cc = np.ogrid[: shape[0], : shape[1]]
    return (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius**2


def rasterize_markers(sdc: np.ndarray, route_point=None, waypoints=None,
                      ego_point=None) -> np.ndarray:
    """Render the SDC with route/waypoint markers as an RGB image.

    The route point is drawn as a hollow circle, waypoints as small
    filled circles, and the optional ego point as a filled gray dot.
    Points outside the coverage window are clipped to the border.
    """
    img = np.zeros((GRID, GRID, 3), dtype=np.uint8)
    occupied = sdc.argmax(axis=0)
    any_hit = sdc.any(axis=0)
    img[any_hit] = _PALETTE[occupied[any_hit]]

    def clip_cell(pt):
        row, col = local_point_to_cell(float(pt[0]), float(pt[1]))
        return min(max(row, 0), GRID - 1), min(max(col, 0), GRID - 1)

    if route_point is not None:
        center = clip_cell(route_point)
        ring = _disk_mask(img.shape[:2], center, 4.5) & ~_disk_mask(img.shape[:2], center, 2.5)
        img[ring] = (255, 255, 255)
    for wp in waypoints if waypoints is not None else []:
        img[_disk_mask(img.shape[:2], clip_cell(wp), 1.5)] = (255, 255, 255)
    if ego_point is not None:
        img[_disk_mask(img.shape[:2], clip_cell(ego_point), 1.5)] = (200, 200, 200)
    return img
