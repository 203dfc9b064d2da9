"""Two-agent control stack: GRU waypoint predictor, MLP agent, PID agent,
and the four-branch fusion policy that picks the final controls.

Waypoints live in the ego BEV frame (x right-positive, y forward-
positive) and are produced as a running sum of per-step deltas starting
from the ego origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .netexec import WeightBundle, gru_cell, linear, sigmoid
from .vehicle import THROTTLE_RANGE, VehicularControls

THROTTLE_ACTIVE_THRESHOLD = 0.2
POLICY_VARIANTS = ("proposed", "mlp", "pid", "both", "nosdc")


def predict_waypoints(features: np.ndarray, route_local: np.ndarray, speed: float,
                      tl: float, ss: float, bundle: WeightBundle):
    """Run the recurrent waypoint predictor.

    The reduced feature vector seeds the GRU hidden state. Three loop
    iterations each feed (current waypoint, route point, speed) to the
    GRU; the hidden state biased by the encoded traffic-light/stop-sign
    bits is decoded into a delta that advances the waypoint. The carried
    hidden state stays unbiased; the returned latent is the final biased
    state.

    Returns (waypoints (3, 2), latent (hidden,)).
    """
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (bundle.tensors["reduce.weight"].shape[1],):
        raise ValueError(f"feature vector has shape {f.shape}")
    route = np.asarray(route_local, dtype=np.float64)
    t = bundle.tensors
    gru_p = bundle.gru_params()

    h = linear(t["reduce.weight"], t["reduce.bias"], f)
    bias = linear(t["tlss.weight"], t["tlss.bias"], np.array([tl, ss], dtype=np.float64))

    wp = np.zeros(2)
    waypoints = np.zeros((3, 2))
    latent = None
    for i in range(3):
        x = np.array([wp[0], wp[1], route[0], route[1], float(speed)])
        h = gru_cell(x, h, gru_p)
        latent = h + bias
        delta = linear(t["head.weight"], t["head.bias"], latent)
        wp = wp + delta
        waypoints[i] = wp
    return waypoints, latent


def mlp_agent(latent: np.ndarray, bundle: WeightBundle) -> VehicularControls:
    """Decode the latent state into controls: linear, ReLU, linear, then a
    logistic squash to [0, 1] and denormalization (steering 2s-1,
    throttle 0.75t, brake unchanged)."""
    t = bundle.tensors
    hidden = np.maximum(linear(t["mlp.w1"], t["mlp.b1"], np.asarray(latent, dtype=np.float64)), 0.0)
    out = sigmoid(linear(t["mlp.w2"], t["mlp.b2"], hidden))
    return VehicularControls(
        steering=float(2.0 * out[0] - 1.0),
        throttle=float(THROTTLE_RANGE[1] * out[1]),
        brake=float(out[2]),
    )


@dataclass(frozen=True)
class PidGains:
    """Per-axis PID gains with anti-windup and output clamps."""

    kp: float
    ki: float
    kd: float
    integral_limit: float = 1.0
    output_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ValueError("PID gains must be non-negative")


DEFAULT_LATERAL_GAINS = PidGains(0.9, 0.75, 0.3, integral_limit=1.0,
                                 output_range=(-1.0, 1.0))
DEFAULT_LONGITUDINAL_GAINS = PidGains(5.0, 0.5, 1.0, integral_limit=0.75,
                                      output_range=(0.0, THROTTLE_RANGE[1]))


class PidController:
    """Textbook PID with integral clamp. State is owned per run."""

    def __init__(self, gains: PidGains, dt: float = 0.05):
        self.gains = gains
        self.dt = dt
        self.reset()

    def reset(self):
        self.integral = 0.0
        self.prev_error = None

    def step(self, error: float) -> float:
        g = self.gains
        self.integral += error * self.dt
        self.integral = min(max(self.integral, -g.integral_limit), g.integral_limit)
        derivative = 0.0 if self.prev_error is None else (error - self.prev_error) / self.dt
        self.prev_error = error
        out = g.kp * error + g.ki * self.integral + g.kd * derivative
        return min(max(out, g.output_range[0]), g.output_range[1])


class PidAgent:
    """Waypoint-following agent: lateral PID on the heading to the first
    two waypoints' midpoint, longitudinal PID toward twice their gap.

    The desired speed is 2 * ||wp1 - wp2||; the heading error is zero
    when the midpoint lies straight ahead. Brake is left to the fusion
    policy.
    """

    def __init__(self, lateral: PidGains = DEFAULT_LATERAL_GAINS,
                 longitudinal: PidGains = DEFAULT_LONGITUDINAL_GAINS,
                 dt: float = 0.05):
        self.lateral = PidController(lateral, dt)
        self.longitudinal = PidController(longitudinal, dt)

    def reset(self):
        self.lateral.reset()
        self.longitudinal.reset()

    def control(self, waypoints: np.ndarray, speed: float) -> VehicularControls:
        theta, desired = pid_setpoints(waypoints)
        steering = self.lateral.step(theta)
        throttle = self.longitudinal.step(desired - float(speed))
        return VehicularControls(steering=steering,
                                 throttle=min(max(throttle, 0.0), THROTTLE_RANGE[1]),
                                 brake=0.0)


def pid_setpoints(waypoints: np.ndarray) -> tuple[float, float]:
    """(heading error theta, desired speed gamma) from the waypoint pair.

    theta is atan2(lateral, forward) of the first two waypoints'
    midpoint, defined as 0 at the origin; gamma is twice the norm of
    their difference.
    """
    wp = np.asarray(waypoints, dtype=np.float64)
    mid = 0.5 * (wp[0] + wp[1])
    theta = 0.0 if mid[0] == 0.0 and mid[1] == 0.0 else math.atan2(mid[0], mid[1])
    return theta, 2.0 * float(np.linalg.norm(wp[0] - wp[1]))


@dataclass(frozen=True)
class ControlWeights:
    """Blend weights beta[agent][channel]; each column sums to one.

    Row 0 weighs the MLP agent, row 1 the PID agent; columns are
    steering, throttle, brake.
    """

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=np.float64)
        if b.shape != (2, 3):
            raise ValueError("control weights must be 2x3")
        if np.any(b < 0.0) or np.any(b > 1.0):
            raise ValueError("control weights must lie in [0, 1]")
        if not np.allclose(b.sum(axis=0), 1.0, atol=1e-9):
            raise ValueError("control weight columns must sum to 1")
        object.__setattr__(self, "beta", b)


def compute_beta(alpha) -> ControlWeights:
    """Derive blend weights from task loss weights.

    alpha holds the seven per-task loss weights; the steering, throttle
    and brake columns come from alpha_4..alpha_6 against the waypoint
    weight alpha_7, so the blend only depends on their ratios.
    """
    a = np.asarray(alpha, dtype=np.float64)
    if a.shape != (7,):
        raise ValueError("expected seven loss weights")
    if np.any(a < 0.0):
        raise ValueError("loss weights must be non-negative")
    a4, a5, a6, a7 = a[3], a[4], a[5], a[6]
    for pair in ((a4, a7), (a5, a7), (a6, a7)):
        if pair[0] + pair[1] <= 0.0:
            raise ValueError("loss-weight pair sums must be positive")
    top = np.array([a4 / (a4 + a7), a5 / (a5 + a7), a6 / (a6 + a7)])
    return ControlWeights(np.stack([top, 1.0 - top]))


DEFAULT_ALPHA = np.ones(7)


def fuse_controls(mlp: VehicularControls, pid: VehicularControls,
                  weights: ControlWeights) -> VehicularControls:
    """Four-branch control policy.

    Both throttles active: blend steering and throttle with beta, no
    brake. Exactly one active: that agent's controls pass through. None
    active: stop, with brake blended between the MLP brake and a full
    PID brake.
    """
    b = weights.beta
    mlp_on = mlp.throttle >= THROTTLE_ACTIVE_THRESHOLD
    pid_on = pid.throttle >= THROTTLE_ACTIVE_THRESHOLD
    if mlp_on and pid_on:
        return VehicularControls(
            steering=b[0, 0] * mlp.steering + b[1, 0] * pid.steering,
            throttle=b[0, 1] * mlp.throttle + b[1, 1] * pid.throttle,
            brake=0.0,
        )
    if mlp_on:
        return VehicularControls(mlp.steering, mlp.throttle, 0.0)
    if pid_on:
        return VehicularControls(pid.steering, pid.throttle, 0.0)
    pid_brake = 1.0
    return VehicularControls(0.0, 0.0, b[0, 2] * mlp.brake + b[1, 2] * pid_brake)


def apply_policy(variant: str, mlp: VehicularControls, pid: VehicularControls,
                 weights: ControlWeights) -> VehicularControls:
    """Final controls under one of the ablation policy variants.

    'proposed' (and 'nosdc', which differs only upstream in the feature
    source) runs the full fusion policy. 'mlp' and 'pid' are
    single-agent with the same 0.2 throttle-activity stop rule. 'both'
    drives only when both agents are active, otherwise stops through the
    fusion policy's brake branch.
    """
    v = variant.lower()
    if v not in POLICY_VARIANTS:
        raise ValueError(f"unknown policy variant {variant!r}")
    if v in ("proposed", "nosdc"):
        return fuse_controls(mlp, pid, weights)
    if v == "mlp":
        if mlp.throttle >= THROTTLE_ACTIVE_THRESHOLD:
            return VehicularControls(mlp.steering, mlp.throttle, 0.0)
        return VehicularControls(0.0, 0.0, 1.0)
    if v == "pid":
        if pid.throttle >= THROTTLE_ACTIVE_THRESHOLD:
            return VehicularControls(pid.steering, pid.throttle, 0.0)
        return VehicularControls(0.0, 0.0, 1.0)
    # 'both'
    if (mlp.throttle >= THROTTLE_ACTIVE_THRESHOLD
            and pid.throttle >= THROTTLE_ACTIVE_THRESHOLD):
        return fuse_controls(mlp, pid, weights)
    b = weights.beta
    return VehicularControls(0.0, 0.0, b[0, 2] * mlp.brake + b[1, 2] * 1.0)
