"""Speed-dependent probabilistic field of view.

The field of view of a player is the product of three factors evaluated at
each cell centre: a radial Gaussian decay in distance, an angular Gaussian
decay in the offset from the head direction, and a binary wedge mask.
Both decay rates grow with running speed, narrowing and shortening vision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    DEFAULT_GRID,
    GazeGridError,
    PitchGrid,
    PlayerState,
    Surface,
    SurfaceKind,
    TAU,
)


@dataclass(frozen=True)
class VisionParams:
    fov_total_rad: float = TAU / 3.0
    sigma_r: float = 30.0
    sigma_a: float = math.pi / 3.0
    max_view_distance_m: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.fov_total_rad <= TAU:
            raise GazeGridError("fov_total_rad must lie in (0, 2*pi]")
        if self.sigma_r <= 0 or self.sigma_a <= 0:
            raise GazeGridError("sigma_r and sigma_a must be positive")
        if self.max_view_distance_m <= 0:
            raise GazeGridError("max_view_distance_m must be positive")

    @property
    def half_fov(self) -> float:
        return self.fov_total_rad / 2.0


class SpeedScaling(NamedTuple):
    c_a: float
    c_r: float


def speed_scaling(speed: float) -> SpeedScaling:
    if speed < 0:
        raise GazeGridError("negative speed")
    return SpeedScaling(c_a=min(0.3 * speed + 0.2, 0.5), c_r=min(0.25 * speed + 0.1, 2.6))


def radial_decay(d, scaling: SpeedScaling, params: VisionParams = VisionParams()):
    return np.exp(-scaling.c_r * (np.asarray(d, dtype=np.float64) / params.sigma_r) ** 2)


def angular_decay(theta_a, scaling: SpeedScaling, params: VisionParams = VisionParams()):
    return np.exp(-scaling.c_a * (np.asarray(theta_a, dtype=np.float64) / params.sigma_a) ** 2)


def _require_head(player: PlayerState) -> float:
    if player.head_angle is None:
        raise GazeGridError(f"player {player.player_id} has no head angle")
    return player.head_angle


def view_geometry(player: PlayerState, xs, ys):
    """Distance and absolute angular offset from the head direction to each point.

    Points coinciding with the player get distance 0 and offset 0.
    """
    head = _require_head(player)
    px, py = player.position
    dx = np.asarray(xs, dtype=np.float64) - px
    dy = np.asarray(ys, dtype=np.float64) - py
    d = np.hypot(dx, dy)
    offset = np.arctan2(dy, dx) - head
    offset = np.where(offset > math.pi, offset - TAU, offset)
    offset = np.where(offset <= -math.pi, offset + TAU, offset)
    offset = np.abs(offset)
    offset = np.where(d == 0.0, 0.0, offset)
    return d, offset


def _in_pitch(xs, ys, grid: PitchGrid):
    return (np.abs(xs) <= grid.length_m / 2.0) & (np.abs(ys) <= grid.width_m / 2.0)


def _own_cell_geometry(player: PlayerState, grid: PitchGrid, d, offset):
    """Collapse the cell containing the player onto the player's position."""
    cell = grid.cell_of(*player.position)
    own = np.zeros(grid.shape, dtype=bool)
    if cell is not None:
        col, row = cell
        own[row, col] = True
        d = np.where(own, 0.0, d)
        offset = np.where(own, 0.0, offset)
    return d, offset, own


def wedge_mask(xs, ys, d, offset, params: VisionParams, grid: PitchGrid = DEFAULT_GRID):
    mask = (offset <= params.half_fov) & _in_pitch(np.asarray(xs), np.asarray(ys), grid)
    if math.isfinite(params.max_view_distance_m):
        mask &= d <= params.max_view_distance_m
    return mask.astype(np.float64)


def binary_fov(
    player: PlayerState, grid: PitchGrid = DEFAULT_GRID, params: VisionParams = VisionParams()
) -> Surface:
    X, Y = grid.mesh
    d, offset = view_geometry(player, X, Y)
    d, offset, _ = _own_cell_geometry(player, grid, d, offset)
    return Surface(wedge_mask(X, Y, d, offset, params, grid), SurfaceKind.VISION, grid)


def fov_at_points(player: PlayerState, xs, ys, params: VisionParams = VisionParams(), grid=DEFAULT_GRID):
    """Field-of-view value at arbitrary points (no own-cell special case)."""
    scaling = speed_scaling(player.speed)
    d, offset = view_geometry(player, xs, ys)
    return (
        radial_decay(d, scaling, params)
        * angular_decay(offset, scaling, params)
        * wedge_mask(xs, ys, d, offset, params, grid)
    )


def field_of_view(
    player: PlayerState, grid: PitchGrid = DEFAULT_GRID, params: VisionParams = VisionParams()
) -> Surface:
    """Probabilistic field of view over the grid; the player's own cell is 1."""
    scaling = speed_scaling(player.speed)
    X, Y = grid.mesh
    d, offset = view_geometry(player, X, Y)
    d, offset, _ = _own_cell_geometry(player, grid, d, offset)
    values = (
        radial_decay(d, scaling, params)
        * angular_decay(offset, scaling, params)
        * wedge_mask(X, Y, d, offset, params, grid)
    )
    return Surface(values, SurfaceKind.VISION, grid)
