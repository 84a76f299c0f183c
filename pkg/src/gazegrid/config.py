"""Run configuration: flat ``key = value`` text with every tunable and its default.

Angles are given in degrees in the file and converted to radians when the
per-module parameter objects are built.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Union

from .control import ControlParams
from .core import GazeGridError
from .occlusion import BodyModel, OcclusionParams
from .value import ValueParams, ValueSource
from .vision import VisionParams


@dataclass(frozen=True)
class Config:
    # vision
    fov_total_deg: float = 120.0
    sigma_r_m: float = 30.0
    sigma_a_deg: float = 60.0
    max_view_distance_m: float = math.inf
    # occlusion
    sigma_q_deg: Optional[float] = None  # follows sigma_a_deg when unset
    alpha: float = 0.9
    shoulder_width_m: float = 0.5
    torso_depth_m: float = 0.3
    min_pair_distance_m: float = 0.3
    width_rule: str = "silhouette"
    # control
    c_in: float = 0.5
    influence_horizon_s: float = 0.5
    radius_min_m: float = 4.0
    radius_max_m: float = 10.0
    radius_ball_distance_m: float = 18.0
    speed_norm: float = 13.0
    logistic_steepness: float = 1.0
    # value
    goal_x: float = 52.5
    goal_y: float = 0.0
    eta_decay_m: float = 45.0
    value_source: str = ValueSource.SURROGATE.value
    value_surface_path: str = ""
    # kinematics and phases
    smoothing_window: int = 5
    max_speed: float = 12.0
    frame_rate: float = 25.0
    vea_threshold_deg_s: float = 125.0
    reception_window_s: float = 10.0
    release_window_s: float = 15.0
    set_piece_gap_s: float = 7.0
    require_uncontested: bool = True
    # labels
    label_low: float = 0.35
    label_high: float = 0.65
    # execution
    engine: str = "fast"

    def __post_init__(self):
        if self.engine not in ("fast", "reference"):
            raise GazeGridError(f"engine must be 'fast' or 'reference', got {self.engine!r}")
        if not 0.0 <= self.label_low <= self.label_high <= 1.0:
            raise GazeGridError("need 0 <= label_low <= label_high <= 1")
        if self.frame_rate <= 0:
            raise GazeGridError("frame_rate must be positive")
        # build every parameter object once so bad values fail at load time
        self.vision_params
        self.body
        self.occlusion_params
        self.control_params
        self.value_params

    # -- derived parameter objects -------------------------------------------

    @property
    def vision_params(self) -> VisionParams:
        return VisionParams(
            fov_total_rad=math.radians(self.fov_total_deg),
            sigma_r=self.sigma_r_m,
            sigma_a=math.radians(self.sigma_a_deg),
            max_view_distance_m=self.max_view_distance_m,
        )

    @property
    def body(self) -> BodyModel:
        return BodyModel(self.shoulder_width_m, self.torso_depth_m)

    @property
    def resolved_sigma_q_deg(self) -> float:
        return self.sigma_a_deg if self.sigma_q_deg is None else self.sigma_q_deg

    @property
    def occlusion_params(self) -> OcclusionParams:
        return OcclusionParams(
            alpha=self.alpha,
            sigma_q=math.radians(self.resolved_sigma_q_deg),
            min_pair_distance_m=self.min_pair_distance_m,
            width_rule=self.width_rule,
        )

    @property
    def control_params(self) -> ControlParams:
        return ControlParams(
            c_in=self.c_in,
            influence_horizon_s=self.influence_horizon_s,
            radius_min_m=self.radius_min_m,
            radius_max_m=self.radius_max_m,
            radius_ball_distance_m=self.radius_ball_distance_m,
            speed_norm=self.speed_norm,
            logistic_steepness=self.logistic_steepness,
        )

    @property
    def value_params(self) -> ValueParams:
        return ValueParams(
            goal_center=(self.goal_x, self.goal_y),
            eta_decay=self.eta_decay_m,
            value_source=self.value_source,
        )

    # -- serialisation -----------------------------------------------------

    def resolved(self) -> dict:
        out = dataclasses.asdict(self)
        out["sigma_q_deg"] = self.resolved_sigma_q_deg
        return out

    def hash(self) -> str:
        payload = json.dumps(
            {k: repr(v) for k, v in sorted(self.resolved().items())}, sort_keys=True
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def dumps(self) -> str:
        lines = []
        for key, value in self.resolved().items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Config":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise GazeGridError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(known[key], raw)
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "Config":
        mapping = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GazeGridError(f"config line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in mapping:
                raise GazeGridError(f"config line {lineno}: duplicate key {key!r}")
            mapping[key] = value
        return cls.from_mapping(mapping)

    @classmethod
    def load(cls, path: Union[str, Path, None]) -> "Config":
        if path is None:
            return cls()
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _coerce(field: dataclasses.Field, raw):
    if not isinstance(raw, str):
        return raw
    default = field.default
    name = field.name
    if name == "sigma_q_deg":
        return None if raw.lower() in ("", "none") else float(raw)
    try:
        if isinstance(default, bool):
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise GazeGridError(f"bad value for {name}: {raw!r}") from None
    return raw
