"""Per-cell vision, pitch-control and pitch-value surfaces from football tracking data."""

from .config import Config
from .control import ControlParams, pitch_control
from .core import DEFAULT_GRID, Frame, GazeGridError, PitchGrid, PlayerState, Surface, SurfaceKind, Team
from .engine import SurfaceEngine
from .features import Dataset, build_dataset
from .occlusion import BodyModel, OcclusionParams, combined_visibility, vision_map
from .phases import EventType, MatchEvent, Outcome, PhasePair
from .pipeline import find_phases, prepare_frames, run_features
from .value import ValueParams, normalized_value
from .vision import VisionParams, field_of_view

__version__ = "0.1.0"

__all__ = [
    "BodyModel",
    "Config",
    "ControlParams",
    "DEFAULT_GRID",
    "Dataset",
    "EventType",
    "Frame",
    "GazeGridError",
    "MatchEvent",
    "OcclusionParams",
    "Outcome",
    "PhasePair",
    "PitchGrid",
    "PlayerState",
    "Surface",
    "SurfaceEngine",
    "SurfaceKind",
    "Team",
    "ValueParams",
    "VisionParams",
    "build_dataset",
    "combined_visibility",
    "field_of_view",
    "find_phases",
    "normalized_value",
    "pitch_control",
    "prepare_frames",
    "run_features",
    "vision_map",
]
