"""Vehicle control triple and kinematic bicycle motion model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

from .geometry import Pose, normalize_heading

log = logging.getLogger(__name__)

STEERING_RANGE = (-1.0, 1.0)
THROTTLE_RANGE = (0.0, 0.75)
BRAKE_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class VehicularControls:
    """Steering in [-1, 1], throttle in [0, 0.75], brake in [0, 1].

    Positive steering turns right. Values are the denormalized ranges the
    simulator consumes directly.
    """

    steering: float = 0.0
    throttle: float = 0.0
    brake: float = 0.0

    def clamped(self) -> "VehicularControls":
        s = min(max(self.steering, STEERING_RANGE[0]), STEERING_RANGE[1])
        t = min(max(self.throttle, THROTTLE_RANGE[0]), THROTTLE_RANGE[1])
        b = min(max(self.brake, BRAKE_RANGE[0]), BRAKE_RANGE[1])
        if (s, t, b) != (self.steering, self.throttle, self.brake):
            log.debug("controls clamped: (%.3f, %.3f, %.3f) -> (%.3f, %.3f, %.3f)",
                      self.steering, self.throttle, self.brake, s, t, b)
        return VehicularControls(s, t, b)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.steering, self.throttle, self.brake)


FULL_STOP = VehicularControls(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class VehicleParams:
    """Ego dynamics constants. The full-lock steering angle corresponds to
    |steering| = 1."""

    wheelbase: float = 2.5
    max_steer_deg: float = 60.0
    max_accel: float = 3.0
    brake_decel: float = 8.0
    max_speed: float = 20.0
    length: float = 4.5
    width: float = 2.0


@dataclass(frozen=True)
class EgoState:
    pose: Pose
    speed: float = 0.0
    controls: VehicularControls = field(default_factory=VehicularControls)

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError("speed must be non-negative")


def step_ego(ego: EgoState, controls: VehicularControls, dt: float,
             params: VehicleParams = VehicleParams()) -> EgoState:
    """Advance the ego one step with rear-wheel-drive bicycle kinematics.

    Position integrates along the current heading, then heading advances
    by the yaw rate v * tan(delta) / wheelbase. Positive steering lowers
    the compass heading (right turn). Speed never goes negative and is
    capped at params.max_speed.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    c = controls.clamped()

    fwd = ego.pose.forward()
    x = ego.pose.x + fwd[0] * ego.speed * dt
    y = ego.pose.y + fwd[1] * ego.speed * dt

    delta = math.radians(params.max_steer_deg) * c.steering
    yaw_rate = ego.speed * math.tan(delta) / params.wheelbase  # rad/s, right-positive
    heading = normalize_heading(ego.pose.heading - math.degrees(yaw_rate) * dt)

    accel = c.throttle / THROTTLE_RANGE[1] * params.max_accel - c.brake * params.brake_decel
    speed = min(max(ego.speed + accel * dt, 0.0), params.max_speed)

    return EgoState(pose=Pose(x, y, heading), speed=speed, controls=c)


def ego_footprint(ego: EgoState, params: VehicleParams = VehicleParams()):
    from .geometry import rect_footprint

    return rect_footprint((ego.pose.x, ego.pose.y), ego.pose.heading,
                          params.length, params.width)
