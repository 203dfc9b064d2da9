"""Per-step episode traces consumed by the scoring pipeline.

A trace is append-only during a run and frozen to numpy arrays
afterwards, so scoring stays a pure function over immutable data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ActorTrack:
    """One actor's footprint trajectory over the episode."""

    actor_id: str
    kind: str  # pedestrian | vehicle | bicyclist | static
    xy: np.ndarray
    heading: np.ndarray
    active: np.ndarray
    length: float
    width: float


@dataclass
class EpisodeTrace:
    dt: float
    times: np.ndarray
    ego_xy: np.ndarray
    ego_heading: np.ndarray
    ego_speed: np.ndarray
    controls: np.ndarray
    progress_s: np.ndarray
    on_road: np.ndarray
    actors: list[ActorTrack] = field(default_factory=list)
    light_red: dict[str, np.ndarray] = field(default_factory=dict)
    termination: str = "completed"

    def __len__(self) -> int:
        return len(self.times)


class TraceRecorder:
    """Accumulates per-step rows and freezes them into an EpisodeTrace."""

    def __init__(self, dt: float):
        self.dt = dt
        self._rows = {k: [] for k in ("t", "xy", "heading", "speed", "controls",
                                      "progress", "on_road")}
        self._actor_rows: dict[str, dict] = {}
        self._light_rows: dict[str, list] = {}

    def add_step(self, t, ego_xy, ego_heading, ego_speed, controls, progress_s,
                 on_road, actors=(), light_red=None):
        r = self._rows
        r["t"].append(float(t))
        r["xy"].append((float(ego_xy[0]), float(ego_xy[1])))
        r["heading"].append(float(ego_heading))
        r["speed"].append(float(ego_speed))
        r["controls"].append(tuple(controls))
        r["progress"].append(float(progress_s))
        r["on_road"].append(bool(on_road))
        for actor_id, kind, xy, heading, active, length, width in actors:
            slot = self._actor_rows.setdefault(actor_id, {
                "kind": kind, "length": length, "width": width,
                "xy": [], "heading": [], "active": [],
            })
            slot["xy"].append((float(xy[0]), float(xy[1])))
            slot["heading"].append(float(heading))
            slot["active"].append(bool(active))
        for light_id, is_red in (light_red or {}).items():
            self._light_rows.setdefault(light_id, []).append(bool(is_red))

    def freeze(self, termination: str) -> EpisodeTrace:
        actors = [
            ActorTrack(actor_id=aid, kind=s["kind"],
                       xy=np.asarray(s["xy"]), heading=np.asarray(s["heading"]),
                       active=np.asarray(s["active"], dtype=bool),
                       length=s["length"], width=s["width"])
            for aid, s in self._actor_rows.items()
        ]
        return EpisodeTrace(
            dt=self.dt,
            times=np.asarray(self._rows["t"]),
            ego_xy=np.asarray(self._rows["xy"]),
            ego_heading=np.asarray(self._rows["heading"]),
            ego_speed=np.asarray(self._rows["speed"]),
            controls=np.asarray(self._rows["controls"]),
            progress_s=np.asarray(self._rows["progress"]),
            on_road=np.asarray(self._rows["on_road"], dtype=bool),
            actors=actors,
            light_red={k: np.asarray(v, dtype=bool) for k, v in self._light_rows.items()},
            termination=termination,
        )
