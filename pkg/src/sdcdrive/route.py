"""Routes: sparse goal points, the dense reference path, progress
tracking, and the network-free oracle waypoint source."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Polyline, Pose, global_to_local

DEFAULT_WAYPOINT_SPACINGS = (2.0, 4.0, 6.0)


@dataclass
class RouteSpec:
    """Ordered sparse goal points in global meters.

    The dense reference path interpolates the goal polyline at a fixed
    resample step; the route length is that polyline's length.
    """

    goals: np.ndarray
    resample_step: float = 0.5
    path: Polyline = field(init=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.goals, dtype=float)
        if g.ndim != 2 or g.shape[0] < 2 or g.shape[1] != 2:
            raise ValueError("a route needs at least two 2D goal points")
        if np.any(np.all(np.diff(g, axis=0) == 0.0, axis=1)):
            raise ValueError("consecutive goal points must be distinct")
        self.goals = g
        seg_len = np.hypot(*np.diff(g, axis=0).T)
        self._goal_arcs = np.concatenate([[0.0], np.cumsum(seg_len)])
        base = Polyline(g)
        n = max(int(np.ceil(base.length / self.resample_step)), 1)
        # Keep the goal vertices in the sample set so corners survive.
        s = np.unique(np.concatenate([np.linspace(0.0, base.length, n + 1),
                                      self._goal_arcs]))
        self.path = Polyline(base.point_at(s))

    @property
    def length(self) -> float:
        return self.path.length

    def next_goal(self, progress_s: float) -> np.ndarray:
        """First sparse goal point strictly ahead of the given arc position."""
        ahead = np.nonzero(self._goal_arcs > progress_s + 1e-9)[0]
        return self.goals[ahead[0]] if len(ahead) else self.goals[-1]


class RouteProgress:
    """Monotone arc-length progress of the ego along the reference path.

    Projection never moves backwards, so loops or reversing cannot
    inflate completion.
    """

    def __init__(self, route: RouteSpec):
        self.route = route
        self.s = 0.0

    def update(self, position) -> float:
        s_new, _ = self.route.path.project(position)
        if s_new > self.s:
            self.s = s_new
        return self.s

    def lateral_distance(self, position) -> float:
        _, d = self.route.path.project(position)
        return d

    def remaining(self) -> float:
        return self.route.length - self.s


def oracle_waypoints(ego: Pose, route: RouteSpec, progress_s: float,
                     spacings=DEFAULT_WAYPOINT_SPACINGS) -> np.ndarray:
    """Sample the reference path ahead of the ego at fixed arc-length gaps
    and transform into the local frame.

    Past the end of the path the terminal point repeats, so the sampled
    points collapse onto the goal as the route runs out.
    """
    pts = [route.path.point_at(min(progress_s + gap, route.length)) for gap in spacings]
    return global_to_local(np.array(pts), ego)


def route_point_local(ego: Pose, route: RouteSpec, progress_s: float) -> np.ndarray:
    """The next sparse goal point, in the ego local frame."""
    return global_to_local(route.next_goal(progress_s), ego)
