"""Occlusion of a player's view by the bodies of other players.

Each other player ``j`` casts a Gaussian "shadow ray" from the observer
``i`` through ``j``. The ray's angular width shrinks as ``j`` gets further
away and as ``j``'s torso turns side-on to the observer. The shadow only
exists beyond ``j`` and is capped at a maximum obstruction probability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .core import (
    DEFAULT_GRID,
    GazeGridError,
    PitchGrid,
    PlayerState,
    Surface,
    SurfaceKind,
    TAU,
    sorted_players,
)
from .vision import VisionParams, field_of_view

logger = logging.getLogger(__name__)

WidthRule = Literal["silhouette", "diagonal"]


class CoincidentPlayers(GazeGridError):
    pass


@dataclass(frozen=True)
class BodyModel:
    shoulder_width: float = 0.5
    torso_depth: float = 0.3

    def __post_init__(self):
        if not self.shoulder_width > self.torso_depth > 0:
            raise GazeGridError("need shoulder_width > torso_depth > 0")


@dataclass(frozen=True)
class OcclusionParams:
    alpha: float = 0.9
    sigma_q: float = math.pi / 3.0
    min_pair_distance_m: float = 0.3
    # "diagonal" compares only the two diagonals of the torso rectangle; it
    # underestimates the silhouette when the observer faces one side squarely.
    width_rule: WidthRule = "silhouette"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise GazeGridError("alpha must lie in (0, 1]")
        if self.sigma_q <= 0:
            raise GazeGridError("sigma_q must be positive")
        if self.width_rule not in ("silhouette", "diagonal"):
            raise GazeGridError(f"unknown width_rule {self.width_rule!r}")


@dataclass(frozen=True)
class PairGeometry:
    delta: float
    ray_angle: float
    omega: float
    corners: tuple[tuple[float, float], ...]


def torso_corners(p_j, theta_s: float, body: BodyModel = BodyModel()) -> list[tuple[float, float]]:
    """Rectangle corners of a torso centred at ``p_j`` rotated by ``theta_s``.

    Local corners are ``(w/2, d/2), (-w/2, d/2), (-w/2, -d/2), (w/2, -d/2)``.
    """
    hw, hd = body.shoulder_width / 2.0, body.torso_depth / 2.0
    c, s = math.cos(theta_s), math.sin(theta_s)
    out = []
    for lx, ly in ((hw, hd), (-hw, hd), (-hw, -hd), (hw, -hd)):
        out.append((c * lx - s * ly + p_j[0], s * lx + c * ly + p_j[1]))
    return out


def _angle_between(a, b) -> float:
    cosine = (a[0] * b[0] + a[1] * b[1]) / (math.hypot(*a) * math.hypot(*b))
    return math.acos(min(1.0, max(-1.0, cosine)))


def _corner_angles(p_i, corners, rule: WidthRule) -> float:
    vecs = [(cx - p_i[0], cy - p_i[1]) for cx, cy in corners]
    if rule == "diagonal":
        return max(_angle_between(vecs[0], vecs[2]), _angle_between(vecs[1], vecs[3]))
    return max(
        _angle_between(vecs[a], vecs[b]) for a in range(4) for b in range(a + 1, 4)
    )


def apparent_width(
    p_i,
    p_j,
    theta_s: float,
    body: BodyModel = BodyModel(),
    min_pair_distance_m: float = 0.3,
    rule: WidthRule = "silhouette",
) -> float:
    """Angle in radians subtended at ``p_i`` by the torso rectangle of ``j``.

    The rectangle is symmetric under a half turn, so ``theta_s`` is reduced
    modulo pi first; the result is then exactly invariant under
    ``theta_s -> theta_s + pi``.
    """
    delta = math.hypot(p_j[0] - p_i[0], p_j[1] - p_i[1])
    if delta < min_pair_distance_m:
        raise CoincidentPlayers("players coincident")
    corners = torso_corners(p_j, math.remainder(theta_s, math.pi), body)
    return _corner_angles(p_i, corners, rule)


def _shoulder_angle(player_i: PlayerState, player_j: PlayerState) -> float:
    if player_j.shoulder_angle is not None:
        return player_j.shoulder_angle
    if player_j.head_angle is not None:
        return player_j.head_angle + math.pi / 2.0
    # face-on to the observer: the widest possible obstruction
    dx = player_j.position[0] - player_i.position[0]
    dy = player_j.position[1] - player_i.position[1]
    return math.atan2(dy, dx) + math.pi / 2.0


def pair_geometry(
    player_i: PlayerState,
    player_j: PlayerState,
    body: BodyModel = BodyModel(),
    params: OcclusionParams = OcclusionParams(),
) -> PairGeometry:
    p_i, p_j = player_i.position, player_j.position
    theta_s = _shoulder_angle(player_i, player_j)
    omega = apparent_width(p_i, p_j, theta_s, body, params.min_pair_distance_m, params.width_rule)
    delta = math.hypot(p_j[0] - p_i[0], p_j[1] - p_i[1])
    ray = math.atan2(p_j[1] - p_i[1], p_j[0] - p_i[0])
    corners = tuple(torso_corners(p_j, theta_s, body))
    return PairGeometry(delta=delta, ray_angle=ray, omega=omega, corners=corners)


def occlusion_scale(geometry: PairGeometry) -> float:
    return geometry.delta / geometry.omega


def ray_at_points(p_i, geometry: PairGeometry, xs, ys, params: OcclusionParams = OcclusionParams()):
    dx = np.asarray(xs, dtype=np.float64) - p_i[0]
    dy = np.asarray(ys, dtype=np.float64) - p_i[1]
    theta_q = np.arctan2(dy, dx) - geometry.ray_angle
    theta_q = np.where(theta_q > math.pi, theta_q - TAU, theta_q)
    theta_q = np.where(theta_q <= -math.pi, theta_q + TAU, theta_q)
    theta_q = np.abs(theta_q)
    return np.exp(-occlusion_scale(geometry) * (theta_q / params.sigma_q) ** 2)


def beyond_at_points(p_i, p_j, xs, ys):
    ux, uy = p_j[0] - p_i[0], p_j[1] - p_i[1]
    delta = math.hypot(ux, uy)
    ux, uy = ux / delta, uy / delta
    proj = (np.asarray(xs, dtype=np.float64) - p_i[0]) * ux + (np.asarray(ys, dtype=np.float64) - p_i[1]) * uy
    return (proj > delta).astype(np.float64)


def occlusion_ray(
    player_i: PlayerState,
    player_j: PlayerState,
    grid: PitchGrid = DEFAULT_GRID,
    body: BodyModel = BodyModel(),
    params: OcclusionParams = OcclusionParams(),
) -> Surface:
    geometry = pair_geometry(player_i, player_j, body, params)
    X, Y = grid.mesh
    return Surface(ray_at_points(player_i.position, geometry, X, Y, params), SurfaceKind.OCCLUSION, grid)


def beyond_mask(p_i, p_j, grid: PitchGrid = DEFAULT_GRID, min_pair_distance_m: float = 0.3) -> Surface:
    if math.hypot(p_j[0] - p_i[0], p_j[1] - p_i[1]) < min_pair_distance_m:
        raise CoincidentPlayers("players coincident")
    X, Y = grid.mesh
    return Surface(beyond_at_points(p_i, p_j, X, Y), SurfaceKind.OCCLUSION, grid)


def pair_occlusion(
    player_i: PlayerState,
    player_j: PlayerState,
    grid: PitchGrid = DEFAULT_GRID,
    body: BodyModel = BodyModel(),
    params: OcclusionParams = OcclusionParams(),
) -> Surface:
    """Probability that ``j`` hides each cell from ``i``; zero for a coincident pair."""
    try:
        geometry = pair_geometry(player_i, player_j, body, params)
    except CoincidentPlayers:
        logger.warning(
            "skipping coincident pair %s/%s", player_i.player_id, player_j.player_id
        )
        return Surface(np.zeros(grid.shape), SurfaceKind.OCCLUSION, grid)
    X, Y = grid.mesh
    values = (
        ray_at_points(player_i.position, geometry, X, Y, params)
        * beyond_at_points(player_i.position, player_j.position, X, Y)
        * params.alpha
    )
    return Surface(values, SurfaceKind.OCCLUSION, grid)


def combined_visibility(
    player_i: PlayerState,
    others: Iterable[PlayerState],
    grid: PitchGrid = DEFAULT_GRID,
    body: BodyModel = BodyModel(),
    params: OcclusionParams = OcclusionParams(),
) -> Surface:
    """Probability that nothing blocks ``i``'s view of each cell.

    Factors are multiplied in ascending ``player_id`` order so the result is
    independent of the order of ``others``.
    """
    acc = np.ones(grid.shape, dtype=np.float64)
    for player_j in sorted_players(others):
        if player_j.player_id == player_i.player_id:
            continue
        acc = acc * (1.0 - pair_occlusion(player_i, player_j, grid, body, params).values)
    return Surface(acc, SurfaceKind.OCCLUSION, grid)


def vision_map(
    player_i: PlayerState,
    others: Sequence[PlayerState],
    grid: PitchGrid = DEFAULT_GRID,
    vision_params: VisionParams = VisionParams(),
    body: BodyModel = BodyModel(),
    occ_params: OcclusionParams = OcclusionParams(),
) -> Surface:
    visibility = combined_visibility(player_i, others, grid, body, occ_params)
    fov = field_of_view(player_i, grid, vision_params)
    return Surface(visibility.values * fov.values, SurfaceKind.VISION, grid)
