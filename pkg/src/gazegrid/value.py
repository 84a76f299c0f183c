"""Pitch-value surfaces and the controlled value of a single player."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import ControlParams, default_influence_at_points, pitch_control
from .core import (
    DEFAULT_GRID,
    Frame,
    GazeGridError,
    PitchGrid,
    Surface,
    SurfaceKind,
    Team,
)


class ValueSource(str, enum.Enum):
    EXTERNAL = "external"
    SURROGATE = "surrogate_defensive_influence"


@dataclass(frozen=True)
class ValueParams:
    goal_center: tuple[float, float] = (52.5, 0.0)
    eta_decay: float = 45.0
    value_source: ValueSource = ValueSource.SURROGATE

    def __post_init__(self):
        object.__setattr__(self, "value_source", ValueSource(self.value_source))
        if self.eta_decay <= 0:
            raise GazeGridError("eta_decay must be positive")
        gx, gy = self.goal_center
        if not (abs(gx) == 52.5 and abs(gy) <= 34.0) and not (abs(gy) == 34.0 and abs(gx) <= 52.5):
            raise GazeGridError("goal_center must lie on the pitch boundary")


@dataclass(frozen=True, eq=False)
class ValueSurfaceSet:
    raw: Surface
    eta: Surface
    normalized: Surface


def eta_surface(grid: PitchGrid = DEFAULT_GRID, params: ValueParams = ValueParams()) -> Surface:
    """Distance-to-goal weighting, ``exp(-dist / eta_decay)`` rescaled to a maximum of 1."""
    X, Y = grid.mesh
    # sqrt of the squared distance: cells at equal squared distance get identical values
    dist = np.sqrt((X - params.goal_center[0]) ** 2 + (Y - params.goal_center[1]) ** 2)
    values = np.exp(-dist / params.eta_decay)
    return Surface(values / values.max(), SurfaceKind.VALUE, grid)


def surrogate_raw_value(frame: Frame, grid: PitchGrid = DEFAULT_GRID, control_params: ControlParams = ControlParams()) -> Surface:
    """Defending team's summed (unscaled) influence, rescaled to a maximum of 1."""
    defenders = frame.team(Team.DEFENDING)
    if not defenders:
        raise GazeGridError("team has no players")
    X, Y = grid.mesh
    total = np.zeros(grid.shape)
    for p in defenders:
        total = total + default_influence_at_points(p, frame.ball, X, Y, control_params)
    peak = total.max()
    if peak <= 0:
        raise GazeGridError("defensive influence vanishes on the grid")
    return Surface(total / peak, SurfaceKind.VALUE, grid)


def raw_value_surface(
    frame: Frame,
    grid: PitchGrid = DEFAULT_GRID,
    control_params: ControlParams = ControlParams(),
    params: ValueParams = ValueParams(),
    store=None,
) -> Surface:
    if params.value_source == ValueSource.EXTERNAL:
        if store is None:
            raise GazeGridError("external value source selected but no value-surface file loaded")
        return store.lookup(frame.ball, grid)
    return surrogate_raw_value(frame, grid, control_params)


def normalized_value(
    frame: Frame,
    grid: PitchGrid = DEFAULT_GRID,
    control_params: ControlParams = ControlParams(),
    params: ValueParams = ValueParams(),
    store=None,
) -> ValueSurfaceSet:
    raw = raw_value_surface(frame, grid, control_params, params, store)
    eta = eta_surface(grid, params)
    return ValueSurfaceSet(raw, eta, Surface(raw.values * eta.values, SurfaceKind.VALUE, grid))


def controlled_value(player_control: Surface, normalized: Surface) -> float:
    return float(np.sum(player_control.values * normalized.values))


def instantaneous_player_value(
    frame: Frame,
    player_id: str,
    grid: PitchGrid = DEFAULT_GRID,
    control_params: ControlParams = ControlParams(),
    value_params: ValueParams = ValueParams(),
    store=None,
    value_set: Optional[ValueSurfaceSet] = None,
) -> float:
    """Sum over cells of the player's imminent control times normalised value."""
    if not frame.has_player(player_id):
        raise GazeGridError(f"player {player_id!r} not in frame {frame.frame_id}")
    control = pitch_control(frame, grid, control_params, perspective=player_id)
    if value_set is None:
        value_set = normalized_value(frame, grid, control_params, value_params, store)
    return controlled_value(control.player_i, value_set.normalized)


def goal_distance(position, params: ValueParams = ValueParams()) -> float:
    return math.hypot(position[0] - params.goal_center[0], position[1] - params.goal_center[1])
