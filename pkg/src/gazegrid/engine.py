"""Per-frame surface computation with a compiled fast path and a NumPy reference path.

Both paths produce the same surfaces; the fast path agrees with the
reference to within a few ulps (see ``kernels``). Frames are independent,
so batches are spread over a thread pool and results returned in input order.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

from . import kernels
from .config import Config
from .control import (
    TeamControlSurfaces,
    _influence_axes,
    attacker_share,
    influence_radius,
    pitch_control,
    split_share,
)
from .core import DEFAULT_GRID, Frame, GazeGridError, PitchGrid, Surface, SurfaceKind, Team, sorted_players
from .occlusion import _shoulder_angle, vision_map
from .value import ValueSurfaceSet, controlled_value, eta_surface, raw_value_surface
from .vision import _require_head, speed_scaling

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "GAZEGRID_THREADS"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, else ``GAZEGRID_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise GazeGridError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 1:
        raise GazeGridError("thread count must be >= 1")
    return threads


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on ``threads`` workers, order preserved."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True, eq=False)
class FrameSurfaces:
    """Everything the feature stage needs about one player in one frame."""

    frame_id: int
    player_id: str
    vision: Surface
    control: TeamControlSurfaces
    value: ValueSurfaceSet

    @property
    def player_value(self) -> float:
        return controlled_value(self.control.player_i, self.value.normalized)


class SurfaceEngine:
    def __init__(
        self,
        config: Config = Config(),
        grid: PitchGrid = DEFAULT_GRID,
        store=None,
        engine: Optional[str] = None,
    ):
        self.config = config
        self.grid = grid
        self.store = store
        self.engine = engine or config.engine
        if self.engine not in ("fast", "reference"):
            raise GazeGridError(f"unknown engine {self.engine!r}")
        self.vision_params = config.vision_params
        self.body = config.body
        self.occ_params = config.occlusion_params
        self.control_params = config.control_params
        self.value_params = config.value_params
        self._eta = eta_surface(grid, self.value_params)
        self._xs = np.ascontiguousarray(grid.x_centers, dtype=np.float64)
        self._ys = np.ascontiguousarray(grid.y_centers, dtype=np.float64)

    @property
    def fast(self) -> bool:
        return self.engine == "fast"

    # -- vision ----------------------------------------------------------------

    def vision_maps(self, frame: Frame, player_ids: Optional[Sequence[str]] = None) -> dict[str, Surface]:
        players = sorted_players(frame.players)
        ids = [p.player_id for p in players]
        wanted = ids if player_ids is None else list(player_ids)
        for pid in wanted:
            if pid not in ids:
                raise GazeGridError(f"player {pid!r} not in frame {frame.frame_id}")
        if not self.fast:
            return {
                pid: vision_map(
                    frame.player(pid), players, self.grid, self.vision_params, self.body, self.occ_params
                )
                for pid in wanted
            }
        return self._fast_vision(frame, players, wanted)

    def _fast_vision(self, frame: Frame, players, wanted) -> dict[str, Surface]:
        n = len(players)
        px = np.array([p.position[0] for p in players], dtype=np.float64)
        py = np.array([p.position[1] for p in players], dtype=np.float64)
        shoulder = np.zeros((n, n))
        for i, pi in enumerate(players):
            for j, pj in enumerate(players):
                if i != j:
                    shoulder[i, j] = math.remainder(_shoulder_angle(pi, pj), math.pi)
        delta, ray, ux, uy, cq, skip = kernels.pair_tables(
            px,
            py,
            shoulder,
            self.body.shoulder_width / 2.0,
            self.body.torso_depth / 2.0,
            self.occ_params.min_pair_distance_m,
            self.occ_params.width_rule == "diagonal",
        )
        index = {p.player_id: k for k, p in enumerate(players)}
        vp, op = self.vision_params, self.occ_params
        out = {}
        for pid in wanted:
            i = index[pid]
            player = players[i]
            head = np.zeros(n)
            head[i] = _require_head(player)
            close = [players[j].player_id for j in range(n) if j != i and skip[i, j]]
            if close:
                logger.warning("skipping coincident pairs %s/%s", pid, ",".join(close))
            scaling = speed_scaling(player.speed)
            cell = self.grid.cell_of(*player.position)
            own_col, own_row = cell if cell is not None else (-1, -1)
            values = np.empty(self.grid.shape)
            kernels.vision_map_kernel(
                i, self._xs, self._ys, px, py, head, scaling.c_r, scaling.c_a, own_col, own_row,
                vp.sigma_r, vp.sigma_a, vp.half_fov, vp.max_view_distance_m,
                self.grid.length_m / 2.0, self.grid.width_m / 2.0,
                delta, ray, ux, uy, cq, skip, op.sigma_q, op.alpha, values,
            )
            out[pid] = Surface(values, SurfaceKind.VISION, self.grid)
        return out

    # -- control ---------------------------------------------------------------

    def control(self, frame: Frame, perspective: Optional[str] = None) -> TeamControlSurfaces:
        if not self.fast:
            return pitch_control(frame, self.grid, self.control_params, perspective)
        params = self.control_params
        players = sorted_players(frame.players)
        is_att = np.array([p.team == Team.ATTACKING for p in players], dtype=np.bool_)
        if is_att.all() or not is_att.any():
            raise GazeGridError("team has no players")
        n = len(players)
        mux, muy, cosh, sinh, s_major, s_minor = (np.empty(n) for _ in range(6))
        for k, p in enumerate(players):
            dist = math.hypot(p.position[0] - frame.ball[0], p.position[1] - frame.ball[1])
            radius = influence_radius(dist, params) * params.c_in
            mu, heading, s_major[k], s_minor[k] = _influence_axes(p, frame.ball, params, radius)
            mux[k], muy[k] = mu
            cosh[k], sinh[k] = math.cos(heading), math.sin(heading)
        infl = np.empty((n,) + self.grid.shape)
        att_sum = np.empty(self.grid.shape)
        attacking = np.empty(self.grid.shape)
        kernels.team_control_kernel(
            self._xs, self._ys, mux, muy, cosh, sinh, s_major, s_minor, is_att,
            params.logistic_steepness, infl, att_sum, attacking,
        )
        defending = 1.0 - attacking
        if perspective is None:
            player_i = np.zeros(self.grid.shape)
            excl = attacking
        else:
            ids = [p.player_id for p in players]
            if perspective not in ids or not is_att[ids.index(perspective)]:
                raise GazeGridError(f"player {perspective!r} is not an attacker in frame {frame.frame_id}")
            share = attacker_share(infl[ids.index(perspective)], att_sum, int(is_att.sum()))
            player_i, excl = split_share(attacking, share)
        kind = SurfaceKind.CONTROL
        return TeamControlSurfaces(
            attacking=Surface(attacking, kind, self.grid),
            defending=Surface(defending, kind, self.grid),
            player_i=Surface(player_i, kind, self.grid),
            attacking_excl_i=Surface(excl, kind, self.grid),
        )

    # -- value -----------------------------------------------------------------

    def value(self, frame: Frame) -> ValueSurfaceSet:
        raw = raw_value_surface(frame, self.grid, self.control_params, self.value_params, self.store)
        normalized = Surface(raw.values * self._eta.values, SurfaceKind.VALUE, self.grid)
        return ValueSurfaceSet(raw, self._eta, normalized)

    def player_value(self, frame: Frame, player_id: str) -> float:
        if not frame.has_player(player_id):
            raise GazeGridError(f"player {player_id!r} not in frame {frame.frame_id}")
        return controlled_value(self.control(frame, player_id).player_i, self.value(frame).normalized)

    # -- bundles ---------------------------------------------------------------

    def frame_surfaces(self, frame: Frame, player_id: str) -> FrameSurfaces:
        return FrameSurfaces(
            frame_id=frame.frame_id,
            player_id=player_id,
            vision=self.vision_maps(frame, [player_id])[player_id],
            control=self.control(frame, player_id),
            value=self.value(frame),
        )

    def full_stack(self, frame: Frame):
        """Vision maps for every player plus team control: the benchmarked workload."""
        return self.vision_maps(frame), self.control(frame)

    def map_frames(self, fn: Callable[[Frame], R], frames: Iterable[Frame], threads: Optional[int] = None) -> list[R]:
        return ordered_map(fn, frames, resolve_threads(threads))
