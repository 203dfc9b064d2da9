"""Evaluation: infraction detection, route completion, driving score,
termination rules, and the offline task metrics.

All functions are pure over a frozen EpisodeTrace, so replaying a stored
trace reproduces identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon

from .geometry import convex_polygons_overlap, rect_footprint
from .route import RouteSpec
from .trace import EpisodeTrace
from .vehicle import VehicleParams
from .worldmap import WorldMap

COLLISION_DEDUP_WINDOW_S = 2.0
STOP_COMPLIANCE_SPEED = 0.1  # m/s inside the trigger zone
DEVIATION_LIMIT_M = 30.0
INACTION_LIMIT_S = 180.0
INACTION_DISPLACEMENT_M = 0.05  # over a sliding 1 s window
GOAL_RADIUS_M = 2.0

INFRACTION_TYPES = ("collision_pedestrian", "collision_vehicle", "collision_static",
                    "red_light", "stop_sign")


@dataclass(frozen=True)
class PenaltyTable:
    """Multiplicative penalty per infraction type, ordered by severity."""

    collision_pedestrian: float = 0.50
    collision_vehicle: float = 0.60
    collision_static: float = 0.65
    red_light: float = 0.70
    stop_sign: float = 0.80

    def factor(self, infraction_type: str) -> float:
        value = getattr(self, infraction_type)
        if not 0.0 < value <= 1.0:
            raise ValueError(f"penalty for {infraction_type} outside (0, 1]")
        return value


@dataclass
class InfractionLedger:
    counts: dict[str, int] = field(default_factory=lambda: {t: 0 for t in INFRACTION_TYPES})
    offroad_meters: float = 0.0
    events: list[tuple[str, float, str]] = field(default_factory=list)

    def record(self, infraction_type: str, t: float, actor_id: str = "") -> None:
        self.counts[infraction_type] += 1
        self.events.append((infraction_type, float(t), actor_id))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def merged(self, other: "InfractionLedger") -> "InfractionLedger":
        out = InfractionLedger()
        for t in INFRACTION_TYPES:
            out.counts[t] = self.counts[t] + other.counts[t]
        out.offroad_meters = self.offroad_meters + other.offroad_meters
        out.events = sorted(self.events + other.events, key=lambda e: e[1])
        return out


@dataclass
class RouteResult:
    route_id: str
    rc: float
    ip: float
    ds: float
    termination: str
    ledger: InfractionLedger = field(default_factory=InfractionLedger)
    duration_s: float = 0.0
    completed_km: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.rc <= 100.0):
            raise ValueError("route completion outside [0, 100]")
        if abs(self.ds - self.rc * self.ip) > 1e-9:
            raise ValueError("driving score must equal RC * IP")

    def counts_per_km(self) -> dict[str, float]:
        km = max(self.completed_km, 1e-9)
        return {t: self.ledger.counts[t] / km for t in INFRACTION_TYPES}


# -- infraction detection ------------------------------------------------


def _collision_kind(actor_kind: str) -> str:
    if actor_kind == "pedestrian":
        return "collision_pedestrian"
    if actor_kind in ("vehicle", "bicyclist"):
        return "collision_vehicle"
    return "collision_static"


def _segment_crossings(ego_xy: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Step indices where the ego's per-step segment crosses q1-q2."""
    p1 = ego_xy[:-1]
    p2 = ego_xy[1:]

    def cross(o, a, b):
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) \
            - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])

    d1 = cross(p1, p2, q1[None, :])
    d2 = cross(p1, p2, q2[None, :])
    s1 = cross(q1, q2, p1)
    s2 = cross(q1, q2, p2)
    # Strictly on one side before, on-or-past the line after: a sample
    # sitting exactly on the line cannot be counted twice.
    crossed = ((s1 > 0) & (s2 <= 0)) | ((s1 < 0) & (s2 >= 0))
    hits = crossed & (np.sign(d1) != np.sign(d2))
    return np.nonzero(hits)[0]


def detect_infractions(trace: EpisodeTrace, world_map: WorldMap,
                       params: VehicleParams = VehicleParams()) -> InfractionLedger:
    """Scan a trace for collisions, light/sign violations and offroad
    driving.

    Collisions are deduplicated per actor within a 2 s window so that
    continuous contact counts once. A stop sign is violated when the ego
    traverses the trigger zone without its speed dropping below
    0.1 m/s inside it.
    """
    ledger = InfractionLedger()
    n = len(trace)
    if n == 0:
        return ledger

    # Offroad meters: displacement accumulated while off the road surface.
    if n > 1:
        step_disp = np.hypot(*np.diff(trace.ego_xy, axis=0).T)
        ledger.offroad_meters = float(np.sum(step_disp[~trace.on_road[:-1]]))

    # Collisions with tracked actors and with static obstacles.
    half_diag_ego = 0.5 * math.hypot(params.length, params.width)
    targets = [(a.actor_id, a.kind, a.xy, a.heading, a.active, a.length, a.width)
               for a in trace.actors]
    for ob_idx, ob in enumerate(world_map.obstacles):
        center = ob.footprint.mean(axis=0)
        xy = np.tile(center, (n, 1))
        targets.append((f"static:{ob_idx}", "static", xy, np.zeros(n),
                        np.ones(n, dtype=bool), 0.0, 0.0))

    for actor_id, kind, xy, heading, active, length, width in targets:
        static_poly = None
        if kind == "static":
            static_poly = world_map.obstacles[int(actor_id.split(":")[1])].footprint
            reach = half_diag_ego + np.max(np.hypot(*(static_poly - xy[0]).T))
        else:
            reach = half_diag_ego + 0.5 * math.hypot(length, width)
        dist = np.hypot(*(trace.ego_xy - xy).T)
        candidates = np.nonzero((dist <= reach + 0.5) & active)[0]
        last_hit_t = -math.inf
        for i in candidates:
            t = trace.times[i]
            if t - last_hit_t < COLLISION_DEDUP_WINDOW_S:
                continue
            ego_poly = rect_footprint(trace.ego_xy[i], trace.ego_heading[i],
                                      params.length, params.width)
            other = (static_poly if static_poly is not None
                     else rect_footprint(xy[i], heading[i], length, width))
            if convex_polygons_overlap(ego_poly, other):
                ledger.record(_collision_kind(kind), t, actor_id)
                last_hit_t = t

    # Red-light violations: crossing an active red stop line while moving
    # along the controlled approach.
    for light in world_map.traffic_lights:
        red = trace.light_red.get(light.light_id)
        if red is None or n < 2:
            continue
        approach = np.array([-math.cos(math.radians(light.approach_heading)),
                             -math.sin(math.radians(light.approach_heading))])
        for i in _segment_crossings(trace.ego_xy, light.stop_line[0], light.stop_line[1]):
            moving_along = float(np.dot(trace.ego_xy[i + 1] - trace.ego_xy[i], approach)) > 0.0
            if red[i] and moving_along:
                ledger.record("red_light", trace.times[i], light.light_id)

    # Stop-sign compliance: min speed inside the zone checked at exit.
    for sign in world_map.stop_signs:
        zone = Polygon(sign.zone)
        shapely.prepare(zone)
        inside = shapely.contains_xy(zone, trace.ego_xy[:, 0], trace.ego_xy[:, 1])
        i = 0
        while i < n:
            if not inside[i]:
                i += 1
                continue
            j = i
            min_speed = math.inf
            while j < n and inside[j]:
                min_speed = min(min_speed, trace.ego_speed[j])
                j += 1
            exited = j < n
            if exited and min_speed >= STOP_COMPLIANCE_SPEED:
                ledger.record("stop_sign", trace.times[j - 1], sign.sign_id)
            i = j
    return ledger


# -- route completion and aggregate scores --------------------------------


def route_completion(trace: EpisodeTrace, route: RouteSpec) -> float:
    """Percent of the route completed, excluding progress made offroad.

    A trace that terminated with reason 'completed' counts the full
    route length before the offroad exclusion is applied.
    """
    if route.length <= 0:
        raise ValueError("route length must be positive")
    if len(trace) == 0:
        return 0.0
    completed = route.length if trace.termination == "completed" else float(trace.progress_s[-1])
    offroad_progress = 0.0
    if len(trace) > 1:
        dprog = np.diff(trace.progress_s)
        offroad_progress = float(np.sum(dprog[~trace.on_road[:-1]]))
    rc = 100.0 * (completed - offroad_progress) / route.length
    return min(max(rc, 0.0), 100.0)


def infraction_penalty(ledger: InfractionLedger,
                       table: PenaltyTable = PenaltyTable()) -> float:
    """Product of per-type penalty factors, starting from an ideal 1.0."""
    ip = 1.0
    for infraction_type in INFRACTION_TYPES:
        ip *= table.factor(infraction_type) ** ledger.counts[infraction_type]
    return ip


@dataclass(frozen=True)
class AggregateScore:
    ds: float
    rc: float
    ip: float
    n_routes: int


def driving_score(results: list[RouteResult]) -> AggregateScore:
    """Mean per-route RC*IP, plus mean RC and mean IP, over the set."""
    if not results:
        raise ValueError("at least one route result is required")
    ds = float(np.mean([r.rc * r.ip for r in results]))
    return AggregateScore(ds=ds,
                          rc=float(np.mean([r.rc for r in results])),
                          ip=float(np.mean([r.ip for r in results])),
                          n_routes=len(results))


# -- termination ----------------------------------------------------------


class TerminationMonitor:
    """Incremental live-run termination rules.

    deviation: more than 30 m laterally off the reference path.
    timeout: under 0.05 m of displacement over any sliding 1 s window,
    sustained for 180 s. completed: within the goal radius of the route
    end (by remaining arc length).
    """

    def __init__(self, route: RouteSpec, dt: float,
                 goal_radius: float = GOAL_RADIUS_M,
                 deviation_limit: float = DEVIATION_LIMIT_M,
                 inaction_limit: float = INACTION_LIMIT_S):
        self.route = route
        self.dt = dt
        self.goal_radius = goal_radius
        self.deviation_limit = deviation_limit
        self.inaction_limit = inaction_limit
        self.window = max(int(round(1.0 / dt)), 1)
        self._positions: list[tuple[float, float]] = []
        self._inactive_s = 0.0

    def update(self, position, progress_s: float, lateral_distance: float) -> str | None:
        """Feed one step; returns a termination reason or None."""
        if self.route.length - progress_s <= self.goal_radius:
            return "completed"
        if lateral_distance > self.deviation_limit:
            return "deviation"
        self._positions.append((float(position[0]), float(position[1])))
        if len(self._positions) > self.window + 1:
            self._positions.pop(0)
        if len(self._positions) > self.window:
            ref = self._positions[0]
            moved = math.dist(ref, self._positions[-1])
            if moved < INACTION_DISPLACEMENT_M:
                self._inactive_s += self.dt
            else:
                self._inactive_s = 0.0
            if self._inactive_s >= self.inaction_limit:
                return "timeout"
        return None


def check_termination(trace: EpisodeTrace, route: RouteSpec,
                      goal_radius: float = GOAL_RADIUS_M) -> str:
    """Apply the live termination rules to a recorded trace.

    Returns the first reason that fires, or 'blocked' when the trace
    ends without meeting any rule.
    """
    monitor = TerminationMonitor(route, trace.dt, goal_radius=goal_radius)
    for i in range(len(trace)):
        lateral = monitor.route.path.project(trace.ego_xy[i])[1]
        reason = monitor.update(trace.ego_xy[i], float(trace.progress_s[i]), lateral)
        if reason is not None:
            return reason
    return "blocked"


# -- task-wise metrics -----------------------------------------------------

SEG_LOSS_EPS = 1e-7


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Intersection over union of two binary masks; empty union counts 1."""
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.shape != g.shape:
        raise ValueError("mask shapes differ")
    p = p.astype(bool)
    g = g.astype(bool)
    union = np.count_nonzero(p | g)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(p & g) / union)


def accuracy(preds, gts) -> float:
    """(TP+TN) / all, thresholding real-valued predictions at 0.5."""
    p = np.asarray(preds, dtype=float)
    g = np.asarray(gts, dtype=float)
    if p.shape != g.shape or p.size == 0:
        raise ValueError("prediction and ground-truth lists must match and be non-empty")
    return float(np.mean((p >= 0.5) == (g >= 0.5)))


def seg_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean binary cross-entropy plus the dice complement.

    Predictions are clipped to [1e-7, 1 - 1e-7]; the dice term uses the
    soft intersection sum(pred * gt).
    """
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError("shapes differ")
    p = np.clip(p, SEG_LOSS_EPS, 1.0 - SEG_LOSS_EPS)
    bce = float(-np.mean(g * np.log(p) + (1.0 - g) * np.log(1.0 - p)))
    denom = float(p.sum() + g.sum())
    dice = 1.0 - (2.0 * float((p * g).sum()) / denom if denom > 0 else 1.0)
    return bce + dice


def mae(pred, gt) -> float:
    """Mean absolute error over all elements."""
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError("shapes differ")
    return float(np.mean(np.abs(p - g)))


LOSS_NAMES = ("seg", "tl", "ss", "steering", "throttle", "brake", "waypoints")


def total_loss(losses, alpha) -> float:
    """Weighted sum of the seven task losses."""
    l = np.asarray(losses, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    if l.shape != (7,) or a.shape != (7,):
        raise ValueError("expected seven losses and seven weights")
    return float(np.dot(a, l))


@dataclass
class MetricReport:
    """Task-wise offline metrics for a prediction log scored against a
    reference log."""

    iou_per_class: dict[int, float]
    iou_mean: float
    acc_tl: float
    acc_ss: float
    mae_steering: float
    mae_throttle: float
    mae_brake: float
    mae_waypoints: float
    losses: dict[str, float]
    loss_total: float
    n_frames: int

    def to_dict(self) -> dict:
        return {
            "iou_per_class": {str(k): v for k, v in self.iou_per_class.items()},
            "iou_mean": self.iou_mean,
            "acc_tl": self.acc_tl,
            "acc_ss": self.acc_ss,
            "mae_steering": self.mae_steering,
            "mae_throttle": self.mae_throttle,
            "mae_brake": self.mae_brake,
            "mae_waypoints": self.mae_waypoints,
            "losses": dict(self.losses),
            "loss_total": self.loss_total,
            "n_frames": self.n_frames,
        }
