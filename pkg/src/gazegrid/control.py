"""Player influence and (imminent) pitch control.

Each player's influence is a bivariate normal centred half a second ahead
of them, stretched along their direction of travel as speed grows, with a
radius that widens with distance from the ball. The imminent variant
shrinks every radius by ``c_in``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_GRID,
    Frame,
    GazeGridError,
    PitchGrid,
    PlayerState,
    Surface,
    SurfaceKind,
    Team,
)


@dataclass(frozen=True)
class ControlParams:
    c_in: float = 0.5
    influence_horizon_s: float = 0.5
    radius_min_m: float = 4.0
    radius_max_m: float = 10.0
    radius_ball_distance_m: float = 18.0
    speed_norm: float = 13.0
    logistic_steepness: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.c_in <= 1.0:
            raise GazeGridError("c_in must lie in (0, 1]")
        if not 0.0 < self.radius_min_m < self.radius_max_m:
            raise GazeGridError("need 0 < radius_min_m < radius_max_m")
        if self.radius_ball_distance_m <= 0 or self.speed_norm <= 0:
            raise GazeGridError("radius_ball_distance_m and speed_norm must be positive")
        if self.logistic_steepness <= 0:
            raise GazeGridError("logistic_steepness must be positive")


# Keeps the minor axis of the influence ellipse strictly positive.
MAX_SPEED_RATIO = 0.99


@dataclass(frozen=True, eq=False)
class TeamControlSurfaces:
    attacking: Surface
    defending: Surface
    player_i: Surface
    attacking_excl_i: Surface


def influence_radius(dist_to_ball: float, params: ControlParams = ControlParams()) -> float:
    """Monotone cubic ramp from ``radius_min_m`` at the ball to ``radius_max_m``."""
    ramp = min(dist_to_ball / params.radius_ball_distance_m, 1.0) ** 3
    return params.radius_min_m + (params.radius_max_m - params.radius_min_m) * ramp


def _influence_axes(player: PlayerState, ball, params: ControlParams, radius: float):
    vx, vy = player.velocity
    speed = math.hypot(vx, vy)
    ratio = min(speed / params.speed_norm, MAX_SPEED_RATIO) ** 2
    s_major = radius * (1.0 + ratio) / 2.0
    s_minor = radius * (1.0 - ratio) / 2.0
    heading = math.atan2(vy, vx) if speed > 0 else 0.0
    mu = (
        player.position[0] + vx * params.influence_horizon_s,
        player.position[1] + vy * params.influence_horizon_s,
    )
    return mu, heading, s_major, s_minor


def _gaussian_ratio(xs, ys, mu, heading, s_major, s_minor):
    c, s = math.cos(heading), math.sin(heading)
    dx = np.asarray(xs, dtype=np.float64) - mu[0]
    dy = np.asarray(ys, dtype=np.float64) - mu[1]
    u = (c * dx + s * dy) / s_major
    w = (-s * dx + c * dy) / s_minor
    return np.exp(-0.5 * (u * u + w * w))


def influence_at_points(player: PlayerState, ball, xs, ys, params: ControlParams = ControlParams()):
    """Imminent influence ``f(p) / f(mu)`` at arbitrary points."""
    dist = math.hypot(player.position[0] - ball[0], player.position[1] - ball[1])
    radius = influence_radius(dist, params) * params.c_in
    return _gaussian_ratio(xs, ys, *_influence_axes(player, ball, params, radius))


def default_influence_at_points(player: PlayerState, ball, xs, ys, params: ControlParams = ControlParams()):
    """Influence with the unscaled radius (``c_in`` ignored)."""
    dist = math.hypot(player.position[0] - ball[0], player.position[1] - ball[1])
    radius = influence_radius(dist, params)
    return _gaussian_ratio(xs, ys, *_influence_axes(player, ball, params, radius))


def player_influence(
    player: PlayerState, ball, grid: PitchGrid = DEFAULT_GRID, params: ControlParams = ControlParams()
) -> Surface:
    X, Y = grid.mesh
    return Surface(influence_at_points(player, ball, X, Y, params), SurfaceKind.CONTROL, grid)


def logistic(x):
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def _team_sums(frame: Frame, xs, ys, params: ControlParams, influence=influence_at_points):
    attackers = frame.team(Team.ATTACKING)
    defenders = frame.team(Team.DEFENDING)
    if not attackers or not defenders:
        raise GazeGridError("team has no players")
    shape = np.shape(xs)
    att = np.zeros(shape)
    per_player = {}
    for p in attackers:
        infl = influence(p, frame.ball, xs, ys, params)
        per_player[p.player_id] = infl
        att = att + infl
    dfn = np.zeros(shape)
    for p in defenders:
        dfn = dfn + influence(p, frame.ball, xs, ys, params)
    return att, dfn, per_player


def control_at_points(frame: Frame, xs, ys, params: ControlParams = ControlParams()):
    """Attacking-team control probability at arbitrary points."""
    att, dfn, _ = _team_sums(frame, xs, ys, params)
    return logistic(params.logistic_steepness * (att - dfn))


def attacker_share(own: np.ndarray, total: np.ndarray, n_attackers: int) -> np.ndarray:
    """One attacker's fraction of the summed attacking influence.

    Where every attacker's influence has underflowed to zero the cell is
    split evenly, so the shares of all attackers still add up to one.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(total > 0, own / total, 1.0 / n_attackers)
    return np.clip(share, 0.0, 1.0)


def split_share(attacking: np.ndarray, share: np.ndarray):
    """Split ``attacking`` into ``(part, rest)`` with ``part + rest == attacking`` exactly.

    The larger piece is computed by multiplication and the smaller by an
    exact subtraction (both pieces lie within a factor two of the whole).
    """
    big_is_part = share >= 0.5
    part_big = attacking * share
    rest_big = attacking * (1.0 - share)
    part = np.where(big_is_part, part_big, attacking - rest_big)
    rest = np.where(big_is_part, attacking - part_big, rest_big)
    return part, rest


def pitch_control(
    frame: Frame,
    grid: PitchGrid = DEFAULT_GRID,
    params: ControlParams = ControlParams(),
    perspective: Optional[str] = None,
) -> TeamControlSurfaces:
    """Team control surfaces plus the share attributed to one attacker.

    The attacker's share at a cell is the team's control times that
    player's fraction of the summed attacking influence.
    """
    X, Y = grid.mesh
    att, dfn, per_player = _team_sums(frame, X, Y, params)
    attacking = logistic(params.logistic_steepness * (att - dfn))
    defending = 1.0 - attacking
    if perspective is None:
        player_i = np.zeros(grid.shape)
        excl = attacking
    else:
        if perspective not in per_player:
            raise GazeGridError(f"player {perspective!r} is not an attacker in frame {frame.frame_id}")
        player_i, excl = split_share(attacking, attacker_share(per_player[perspective], att, len(per_player)))
    kind = SurfaceKind.CONTROL
    return TeamControlSurfaces(
        attacking=Surface(attacking, kind, grid),
        defending=Surface(defending, kind, grid),
        player_i=Surface(player_i, kind, grid),
        attacking_excl_i=Surface(excl, kind, grid),
    )


def observed_control(control: Surface, vision: Surface) -> Surface:
    if control.grid != vision.grid:
        raise GazeGridError("surfaces live on different grids")
    return Surface(control.values * vision.values, SurfaceKind.CONTROL, control.grid)
