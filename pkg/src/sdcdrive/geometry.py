"""Planar geometry: poses, the global-to-local BEV transform, and polylines.

Frame conventions used across the package:

* Global frame: (x_g, y_g) in meters. Headings are compass angles in
  degrees, normalized to [-180, 180).
* Local (BEV) frame: x_l is right-positive, y_l is forward-positive,
  origin on the ego vehicle.

The heading convention is fixed by the transform below: an ego with
heading theta has forward unit vector (-cos(theta), -sin(theta)) and
right unit vector (-sin(theta), cos(theta)) in the global frame, so that
points straight ahead map to (0, +d) in the local frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def normalize_heading(deg: float) -> float:
    """Wrap a heading in degrees to [-180, 180)."""
    return (float(deg) + 180.0) % 360.0 - 180.0


@dataclass
class Pose:
    """Global position in meters plus compass heading in degrees."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        self.heading = normalize_heading(self.heading)

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def forward(self) -> np.ndarray:
        """Unit vector the vehicle is facing, in the global frame."""
        r = math.radians(self.heading)
        return np.array([-math.cos(r), -math.sin(r)])

    def right(self) -> np.ndarray:
        """Unit vector pointing to the vehicle's right, in the global frame."""
        r = math.radians(self.heading)
        return np.array([-math.sin(r), math.cos(r)])


def rotation_matrix_deg(angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def global_to_local(points, ego: Pose) -> np.ndarray:
    """Transform global points into the ego's local BEV frame.

    Subtracts the ego position, then applies the transpose of the 2D
    rotation by (90 + heading) degrees. Accepts a single (x, y) pair or
    an (N, 2) array; returns the same shape.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    rel = np.atleast_2d(pts) - np.array([ego.x, ego.y])
    rt = rotation_matrix_deg(90.0 + ego.heading).T
    out = rel @ rt.T
    return out[0] if single else out


def local_to_global(points, ego: Pose) -> np.ndarray:
    """Inverse of :func:`global_to_local`."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    r = rotation_matrix_deg(90.0 + ego.heading)
    out = np.atleast_2d(pts) @ r.T + np.array([ego.x, ego.y])
    return out[0] if single else out


def heading_from_direction(direction) -> float:
    """Compass heading (degrees) whose forward vector matches `direction`."""
    d = np.asarray(direction, dtype=float)
    # forward(theta) = (-cos theta, -sin theta)  =>  theta = atan2(-dy, -dx)
    return normalize_heading(math.degrees(math.atan2(-d[1], -d[0])))


class Polyline:
    """A 2D polyline with cumulative arc-length indexing."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValueError("polyline needs at least two 2D points")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            keep = np.concatenate([[True], seg_len > 0.0])
            pts = pts[keep]
            if pts.shape[0] < 2:
                raise ValueError("polyline degenerates to a point")
            seg = np.diff(pts, axis=0)
            seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.points = pts
        self._seg = seg
        self._seg_len = seg_len
        self._cum = np.concatenate([[0.0], np.cumsum(seg_len)])

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def point_at(self, s) -> np.ndarray:
        """Point at arc length s (clamped to [0, length])."""
        s_arr = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, self.length)
        idx = np.clip(np.searchsorted(self._cum, s_arr, side="right") - 1, 0, len(self._seg_len) - 1)
        t = (s_arr - self._cum[idx]) / self._seg_len[idx]
        out = self.points[idx] + self._seg[idx] * t[:, None]
        return out[0] if np.isscalar(s) or np.ndim(s) == 0 else out

    def tangent_at(self, s) -> np.ndarray:
        """Unit tangent of the segment containing arc length s."""
        s_c = min(max(float(s), 0.0), self.length)
        idx = min(max(int(np.searchsorted(self._cum, s_c, side="right")) - 1, 0), len(self._seg_len) - 1)
        return self._seg[idx] / self._seg_len[idx]

    def project(self, point) -> tuple[float, float]:
        """Project a point onto the polyline.

        Returns (arc_length, distance) of the closest point.
        """
        p = np.asarray(point, dtype=float)
        rel = p - self.points[:-1]
        t = np.einsum("ij,ij->i", rel, self._seg) / (self._seg_len**2)
        t = np.clip(t, 0.0, 1.0)
        closest = self.points[:-1] + self._seg * t[:, None]
        d2 = np.sum((closest - p) ** 2, axis=1)
        i = int(np.argmin(d2))
        return float(self._cum[i] + t[i] * self._seg_len[i]), float(math.sqrt(d2[i]))


def rect_footprint(center, heading_deg: float, length: float, width: float) -> np.ndarray:
    """Corners (4, 2) of an oriented rectangle, CCW, long axis along heading."""
    pose = Pose(float(center[0]), float(center[1]), heading_deg)
    f, r = pose.forward(), pose.right()
    hl, hw = 0.5 * length, 0.5 * width
    c = np.asarray(center, dtype=float)
    return np.array([
        c + f * hl + r * hw,
        c + f * hl - r * hw,
        c - f * hl - r * hw,
        c - f * hl + r * hw,
    ])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """True if segment p1-p2 crosses segment q1-q2 (inclusive of endpoints)."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def convex_polygons_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test for two convex polygons given as (N, 2) arrays."""
    for poly in (a, b):
        n = len(poly)
        for i in range(n):
            edge = poly[(i + 1) % n] - poly[i]
            axis = np.array([-edge[1], edge[0]])
            pa = a @ axis
            pb = b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True
