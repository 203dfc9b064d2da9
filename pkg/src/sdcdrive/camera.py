"""Synthetic depth/semantic camera.

A pinhole raycaster over 2.5D scene geometry: a classified ground plane
plus extruded convex prisms (obstacles, actors, poles). Images render at
300x400 and are center-cropped to 256x256, preserving the acquisition
protocol of the real sensor stack. Depth is the Euclidean distance along
the ray, clamped to the camera's maximum range; rays that escape report
the sky class at full range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose
from .worldmap import CLS_SKY

RENDER_HEIGHT = 300
RENDER_WIDTH = 400
CROP = 256


@dataclass
class CameraIntrinsics:
    """Pinhole parameters for the cropped 256x256 output.

    fx defaults to 128 px (a 90 degree horizontal field of view over the
    256-wide region of interest). The mount pose is relative to the ego:
    meters forward/right/up plus a pitch in degrees (positive tilts
    down).
    """

    width: int = CROP
    height: int = CROP
    fx: float = 128.0
    cx: float = 127.5
    cy: float = 127.5
    mount_forward: float = 1.0
    mount_right: float = 0.0
    mount_height: float = 1.6
    pitch_deg: float = 0.0
    max_range: float = 1000.0

    def __post_init__(self):
        if self.fx <= 0:
            raise ValueError("focal length must be positive")
        if self.width != CROP or self.height != CROP:
            raise ValueError("output images are fixed at 256x256")


@dataclass
class Prism:
    """Convex footprint extruded from the ground to `height` meters."""

    footprint: np.ndarray
    height: float
    class_id: int

    def __post_init__(self):
        self.footprint = np.asarray(self.footprint, dtype=float)


@dataclass
class SceneGeometry:
    """Renderable scene: ground classifier plus prisms."""

    ground_class_at: object  # vectorized (x, y) -> class ids
    prisms: list[Prism] = field(default_factory=list)


def _camera_rays(cam: CameraIntrinsics, ego: Pose):
    """Origin (3,) and normalized directions (H, W, 3) for the full render."""
    fwd2 = ego.forward()
    right2 = ego.right()
    origin = np.array([
        ego.x + fwd2[0] * cam.mount_forward + right2[0] * cam.mount_right,
        ego.y + fwd2[1] * cam.mount_forward + right2[1] * cam.mount_right,
        cam.mount_height,
    ])
    p = math.radians(cam.pitch_deg)
    x_cam = np.array([right2[0], right2[1], 0.0])
    z_cam = np.array([math.cos(p) * fwd2[0], math.cos(p) * fwd2[1], -math.sin(p)])
    y_cam = np.array([-math.sin(p) * fwd2[0], -math.sin(p) * fwd2[1], -math.cos(p)])

    cx_full = (RENDER_WIDTH - 1) / 2.0
    cy_full = (RENDER_HEIGHT - 1) / 2.0
    u = (np.arange(RENDER_WIDTH) - cx_full) / cam.fx
    v = (np.arange(RENDER_HEIGHT) - cy_full) / cam.fx
    dirs = (u[None, :, None] * x_cam[None, None, :]
            + v[:, None, None] * y_cam[None, None, :]
            + z_cam[None, None, :])
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    return origin, dirs


def _intersect_prism(origin, dirs_flat, prism: Prism):
    """Entry distance of each ray into the prism, inf where missed."""
    tiny = 1e-12
    n_rays = dirs_flat.shape[0]
    t_lo = np.full(n_rays, tiny)
    t_hi = np.full(n_rays, np.inf)

    fp = prism.footprint
    # Ensure CCW orientation so inward normals point into the footprint.
    area2 = np.sum(fp[:, 0] * np.roll(fp[:, 1], -1) - np.roll(fp[:, 0], -1) * fp[:, 1])
    if area2 < 0:
        fp = fp[::-1]
    edges = np.roll(fp, -1, axis=0) - fp
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)  # inward for CCW

    o2 = origin[:2]
    d2 = dirs_flat[:, :2]
    for a, n in zip(fp, normals):
        num = (a - o2) @ n
        den = d2 @ n
        parallel = np.abs(den) < tiny
        t_edge = np.where(parallel, 0.0, num / np.where(parallel, 1.0, den))
        # den > 0: entering the half-plane (lower bound); den < 0: leaving.
        t_lo = np.where(~parallel & (den > 0), np.maximum(t_lo, t_edge), t_lo)
        t_hi = np.where(~parallel & (den < 0), np.minimum(t_hi, t_edge), t_hi)
        # Parallel rays outside the half-plane never hit.
        outside = parallel & (num > 0)
        t_hi = np.where(outside, -np.inf, t_hi)

    dz = dirs_flat[:, 2]
    oz = origin[2]
    parallel_z = np.abs(dz) < tiny
    with np.errstate(divide="ignore", invalid="ignore"):
        t_a = (0.0 - oz) / dz
        t_b = (prism.height - oz) / dz
    z_lo = np.where(parallel_z, tiny, np.minimum(t_a, t_b))
    z_hi = np.where(parallel_z, np.inf, np.maximum(t_a, t_b))
    inside_z = (0.0 <= oz) & (oz <= prism.height)
    z_lo = np.where(parallel_z & ~inside_z, np.inf, z_lo)
    t_lo = np.maximum(t_lo, z_lo)
    t_hi = np.minimum(t_hi, z_hi)

    hit = t_lo <= t_hi
    return np.where(hit, t_lo, np.inf)


def render_full(scene: SceneGeometry, cam: CameraIntrinsics, ego: Pose):
    """Render the uncropped 300x400 depth and semantic images."""
    origin, dirs = _camera_rays(cam, ego)
    flat = dirs.reshape(-1, 3)
    n_rays = flat.shape[0]

    depth = np.full(n_rays, cam.max_range)
    sem = np.full(n_rays, CLS_SKY, dtype=np.uint8)

    # Ground plane.
    dz = flat[:, 2]
    down = dz < -1e-12
    t_ground = np.where(down, origin[2] / np.maximum(-dz, 1e-12), np.inf)
    ground_hit = down & (t_ground < depth)
    if np.any(ground_hit):
        pts = origin[None, :2] + t_ground[ground_hit, None] * flat[ground_hit, :2]
        depth[ground_hit] = t_ground[ground_hit]
        sem[ground_hit] = scene.ground_class_at(pts[:, 0], pts[:, 1])

    for prism in scene.prisms:
        t = _intersect_prism(origin, flat, prism)
        closer = t < depth
        depth[closer] = t[closer]
        sem[closer] = prism.class_id

    depth = np.minimum(depth, cam.max_range)
    return depth.reshape(RENDER_HEIGHT, RENDER_WIDTH), sem.reshape(RENDER_HEIGHT, RENDER_WIDTH)


def center_crop(image: np.ndarray) -> np.ndarray:
    """The central 256x256 window of a 300x400 render."""
    r0 = (RENDER_HEIGHT - CROP) // 2
    c0 = (RENDER_WIDTH - CROP) // 2
    return image[r0:r0 + CROP, c0:c0 + CROP]


def render_depth_semantic(scene: SceneGeometry, cam: CameraIntrinsics, ego: Pose):
    """Cropped (depth, semantic) pair as consumed by the pipeline."""
    depth, sem = render_full(scene, cam, ego)
    return center_crop(depth).copy(), center_crop(sem).copy()
