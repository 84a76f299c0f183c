"""End-to-end stages shared by the command line and the validation suite."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import Config
from .core import Frame, check_sequence, derive_kinematics, interpolate_frame_angles
from .engine import SurfaceEngine
from .features import Dataset, build_dataset
from .phases import MatchEvent, PhasePair, extract_phases, filter_open_play, sync_events

logger = logging.getLogger(__name__)


def prepare_frames(frames: Sequence[Frame], config: Config = Config()) -> list[Frame]:
    """Fill missing angles, then derive velocities unless every record carried its own."""
    check_sequence(frames)
    frames = interpolate_frame_angles(frames)
    needs_kinematics = any("no_velocity" in p.flags for f in frames for p in f.players)
    if needs_kinematics and len(frames) >= 2:
        frames = derive_kinematics(frames, config.smoothing_window, config.max_speed)
    return frames


@dataclass
class PhaseResult:
    extracted: list[PhasePair]
    kept: list[PhasePair]
    dropped_events: list = field(default_factory=list)


def find_phases(events: Sequence[MatchEvent], frames: Sequence[Frame], config: Config = Config()) -> PhaseResult:
    dropped: list = []
    synced = sync_events(events, frames, dropped)
    extracted = extract_phases(
        events,
        frames,
        config.reception_window_s,
        config.release_window_s,
        synced=synced,
        dropped=dropped,
    )
    kept = filter_open_play(extracted, events, config.set_piece_gap_s, config.require_uncontested)
    return PhaseResult(extracted=extracted, kept=kept, dropped_events=dropped)


def run_features(
    events: Sequence[MatchEvent],
    frames: Sequence[Frame],
    config: Config = Config(),
    match_id: str = "match",
    engine: Optional[SurfaceEngine] = None,
    threads: Optional[int] = None,
    prepared: bool = False,
) -> tuple[PhaseResult, Dataset]:
    if not prepared:
        frames = prepare_frames(frames, config)
    phases = find_phases(events, frames, config)
    dataset = build_dataset(phases.kept, frames, config, match_id, engine, threads)
    return phases, dataset
