"""Weather presets realized as sensor degradation.

Each of the fourteen presets carries a depth-noise sigma and a per-pixel
label-flip probability; heavier rain degrades the sensors more. The
clear-noon preset is the identity. Contrast and dropout parameters are
carried for forward compatibility but the degradation applied here is
noise plus label flips only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depthcodec import MAX_RANGE_M


@dataclass(frozen=True)
class WeatherPreset:
    name: str
    depth_sigma: float = 0.0
    label_flip_prob: float = 0.0
    contrast: float = 0.0
    dropout: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.label_flip_prob <= 1.0:
            raise ValueError("flip probability outside [0, 1]")
        if self.depth_sigma < 0.0:
            raise ValueError("depth sigma must be non-negative")


_LEVELS = {
    "clear": (0.0, 0.0),
    "cloudy": (0.05, 0.001),
    "wet": (0.10, 0.002),
    "wet_cloudy": (0.15, 0.003),
    "soft_rain": (0.20, 0.005),
    "mid_rain": (0.30, 0.008),
    "hard_rain": (0.50, 0.015),
}

WEATHER_PRESETS: dict[str, WeatherPreset] = {}
for _cond, (_sigma, _flip) in _LEVELS.items():
    for _tod in ("noon", "sunset"):
        _name = f"{_cond}_{_tod}"
        WEATHER_PRESETS[_name] = WeatherPreset(
            name=_name, depth_sigma=_sigma, label_flip_prob=_flip,
            contrast=0.1 if _tod == "sunset" else 0.0)

ALL_WEATHER_NAMES = tuple(WEATHER_PRESETS)  # 14 presets
CLEAR_NOON = WEATHER_PRESETS["clear_noon"]


def get_preset(name: str) -> WeatherPreset:
    try:
        return WEATHER_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown weather preset {name!r}; "
                         f"expected one of {sorted(WEATHER_PRESETS)}") from None


def apply_weather(depth: np.ndarray, semantic: np.ndarray, preset: WeatherPreset,
                  seed: int):
    """Degrade a (depth, semantic) pair deterministically for a seed.

    Additive Gaussian noise on depth (clamped to the sensor range) and
    independent per-pixel label flips to class 0.
    """
    rng = np.random.default_rng(seed)
    d = np.asarray(depth, dtype=np.float64)
    s = np.asarray(semantic).copy()
    if preset.depth_sigma > 0.0:
        d = np.clip(d + rng.normal(0.0, preset.depth_sigma, size=d.shape),
                    0.0, MAX_RANGE_M)
    else:
        d = d.copy()
    if preset.label_flip_prob > 0.0:
        flips = rng.random(s.shape) < preset.label_flip_prob
        s[flips] = 0
    return d, s
