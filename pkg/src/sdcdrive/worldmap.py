"""Static world description: road surfaces, obstacles, lights, signs.

Maps are authored in versioned YAML (schema ``sdcdrive.map/1``). All
coordinates are global meters. Class ids follow the 23-class vocabulary
used across the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
import yaml
from shapely.geometry import MultiPolygon, Polygon

MAP_SCHEMA = "sdcdrive.map/1"

CLASS_NAMES = (
    "unlabeled", "building", "fence", "other", "pedestrian", "pole",
    "road_lane", "road", "sidewalk", "vegetation", "vehicle", "wall",
    "traffic_sign", "sky", "ground", "bridge", "rail_track", "guard_rail",
    "traffic_light", "static", "dynamic", "water", "terrain",
)
NUM_CLASSES = len(CLASS_NAMES)  # 23

CLS_PEDESTRIAN = 4
CLS_ROAD_LANE = 6
CLS_ROAD = 7
CLS_SIDEWALK = 8
CLS_VEHICLE = 10
CLS_TRAFFIC_SIGN = 12
CLS_SKY = 13
CLS_GROUND = 14
CLS_TRAFFIC_LIGHT = 18
CLS_DYNAMIC = 20

LIGHT_STATES = ("red", "yellow", "green")


@dataclass
class StaticObstacle:
    """Extruded box: footprint polygon, height in meters, semantic class."""

    footprint: np.ndarray
    height: float
    class_id: int

    def __post_init__(self):
        self.footprint = np.asarray(self.footprint, dtype=float)
        if self.footprint.ndim != 2 or self.footprint.shape[0] < 3:
            raise ValueError("obstacle footprint needs at least 3 points")
        if self.height <= 0:
            raise ValueError("obstacle height must be positive")
        if not 0 <= self.class_id < NUM_CLASSES:
            raise ValueError(f"class id {self.class_id} outside 0..22")


@dataclass
class PhaseStep:
    state: str
    duration: float

    def __post_init__(self):
        if self.state not in LIGHT_STATES:
            raise ValueError(f"unknown light state {self.state!r}")
        if self.duration <= 0:
            raise ValueError("phase duration must be positive")


@dataclass
class TrafficLight:
    """A signal head controlling one stop line.

    The approach heading is the compass heading of traffic the light
    controls; crossings count only when moving along it. The schedule
    cycles from t=0 shifted by the offset.
    """

    light_id: str
    position: np.ndarray
    stop_line: np.ndarray
    approach_heading: float
    schedule: list[PhaseStep]
    offset: float = 0.0
    trigger_distance: float = 12.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.stop_line = np.asarray(self.stop_line, dtype=float)
        if self.stop_line.shape != (2, 2):
            raise ValueError("a traffic light references exactly one stop-line segment")
        if np.allclose(self.stop_line[0], self.stop_line[1]):
            raise ValueError("stop-line segment is degenerate")
        if not self.schedule:
            raise ValueError("schedule must have at least one phase")

    @property
    def cycle(self) -> float:
        return sum(p.duration for p in self.schedule)

    def state_at(self, t: float) -> str:
        u = (t + self.offset) % self.cycle
        for phase in self.schedule:
            if u < phase.duration:
                return phase.state
            u -= phase.duration
        return self.schedule[-1].state


@dataclass
class StopSign:
    sign_id: str
    position: np.ndarray
    zone: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.zone = np.asarray(self.zone, dtype=float)
        if self.zone.ndim != 2 or self.zone.shape[0] < 3:
            raise ValueError("stop zone needs at least 3 points")


@dataclass
class WorldMap:
    name: str
    roads: list[np.ndarray] = field(default_factory=list)
    sidewalks: list[np.ndarray] = field(default_factory=list)
    lane_markings: list[np.ndarray] = field(default_factory=list)
    lanes: list[np.ndarray] = field(default_factory=list)
    obstacles: list[StaticObstacle] = field(default_factory=list)
    traffic_lights: list[TrafficLight] = field(default_factory=list)
    stop_signs: list[StopSign] = field(default_factory=list)
    lane_width: float = 3.5
    ground_class: int = CLS_GROUND

    def __post_init__(self):
        self.roads = [np.asarray(p, dtype=float) for p in self.roads]
        self.sidewalks = [np.asarray(p, dtype=float) for p in self.sidewalks]
        self.lane_markings = [np.asarray(p, dtype=float) for p in self.lane_markings]
        self.lanes = [np.asarray(p, dtype=float) for p in self.lanes]
        self._geom_cache = None

    # -- geometry lookups ------------------------------------------------

    def _geoms(self):
        if self._geom_cache is None:
            def multi(polys):
                shp = MultiPolygon([Polygon(p) for p in polys]) if polys else MultiPolygon([])
                shapely.prepare(shp)
                return shp

            self._geom_cache = {
                "road": multi(self.roads),
                "sidewalk": multi(self.sidewalks),
                "lane_marking": multi(self.lane_markings),
            }
        return self._geom_cache

    def on_road(self, x, y):
        """Vectorized: True where (x, y) lies on a road polygon."""
        return shapely.contains_xy(self._geoms()["road"], x, y)

    def ground_class_at(self, x, y) -> np.ndarray:
        """Semantic class of the ground plane at each query point.

        Priority: lane marking, road, sidewalk, then the default ground
        class.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(x.shape, self.ground_class, dtype=np.uint8)
        g = self._geoms()
        sidewalk = shapely.contains_xy(g["sidewalk"], x, y)
        out[sidewalk] = CLS_SIDEWALK
        road = shapely.contains_xy(g["road"], x, y)
        out[road] = CLS_ROAD
        marking = shapely.contains_xy(g["lane_marking"], x, y)
        out[marking] = CLS_ROAD_LANE
        return out

    def light_by_id(self, light_id: str) -> TrafficLight:
        for light in self.traffic_lights:
            if light.light_id == light_id:
                return light
        raise KeyError(light_id)

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        """Raise ValueError when a structural invariant is broken."""
        road = self._geoms()["road"]
        for i, lane in enumerate(self.lanes):
            if lane.ndim != 2 or lane.shape[0] < 2:
                raise ValueError(f"lane {i} needs at least 2 points")
            inside = shapely.contains_xy(road, lane[:, 0], lane[:, 1])
            if not np.all(inside):
                raise ValueError(f"lane centerline {i} leaves the road surface")
        for ob in self.obstacles:
            if not 0 <= ob.class_id < NUM_CLASSES:
                raise ValueError("obstacle class id outside 0..22")
        ids = [l.light_id for l in self.traffic_lights]
        if len(ids) != len(set(ids)):
            raise ValueError("traffic light ids must be unique")

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": MAP_SCHEMA,
            "name": self.name,
            "lane_width": self.lane_width,
            "ground_class": int(self.ground_class),
            "roads": [p.tolist() for p in self.roads],
            "sidewalks": [p.tolist() for p in self.sidewalks],
            "lane_markings": [p.tolist() for p in self.lane_markings],
            "lanes": [p.tolist() for p in self.lanes],
            "obstacles": [
                {"footprint": ob.footprint.tolist(), "height": ob.height,
                 "class_id": int(ob.class_id)}
                for ob in self.obstacles
            ],
            "traffic_lights": [
                {"id": l.light_id, "position": l.position.tolist(),
                 "stop_line": l.stop_line.tolist(),
                 "approach_heading": l.approach_heading,
                 "offset": l.offset, "trigger_distance": l.trigger_distance,
                 "schedule": [{"state": p.state, "duration": p.duration}
                              for p in l.schedule]}
                for l in self.traffic_lights
            ],
            "stop_signs": [
                {"id": s.sign_id, "position": s.position.tolist(),
                 "zone": s.zone.tolist()}
                for s in self.stop_signs
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @classmethod
    def from_dict(cls, data: dict) -> "WorldMap":
        if data.get("schema") != MAP_SCHEMA:
            raise ValueError(f"unsupported map schema {data.get('schema')!r}")
        return cls(
            name=data["name"],
            lane_width=float(data.get("lane_width", 3.5)),
            ground_class=int(data.get("ground_class", CLS_GROUND)),
            roads=data.get("roads", []),
            sidewalks=data.get("sidewalks", []),
            lane_markings=data.get("lane_markings", []),
            lanes=data.get("lanes", []),
            obstacles=[StaticObstacle(o["footprint"], o["height"], o["class_id"])
                       for o in data.get("obstacles", [])],
            traffic_lights=[
                TrafficLight(
                    light_id=l["id"], position=l["position"], stop_line=l["stop_line"],
                    approach_heading=float(l["approach_heading"]),
                    offset=float(l.get("offset", 0.0)),
                    trigger_distance=float(l.get("trigger_distance", 12.0)),
                    schedule=[PhaseStep(p["state"], float(p["duration"]))
                              for p in l["schedule"]],
                )
                for l in data.get("traffic_lights", [])
            ],
            stop_signs=[StopSign(s["id"], s["position"], s["zone"])
                        for s in data.get("stop_signs", [])],
        )

    @classmethod
    def load(cls, path) -> "WorldMap":
        data = yaml.safe_load(Path(path).read_text())
        world_map = cls.from_dict(data)
        world_map.validate()
        return world_map
