"""Pitch grid, surfaces, player/frame records and angle arithmetic."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

TAU = 2.0 * math.pi
PITCH_LENGTH_M = 105.0
PITCH_WIDTH_M = 68.0
PITCH_MARGIN_M = 5.0


class GazeGridError(ValueError):
    """Raised when an operation's precondition is violated."""


class Team(str, enum.Enum):
    ATTACKING = "attacking"
    DEFENDING = "defending"


class SurfaceKind(str, enum.Enum):
    VISION = "vision"
    OCCLUSION = "occlusion"
    CONTROL = "control"
    VALUE = "value"
    GENERIC = "generic"


PROBABILITY_KINDS = frozenset(
    {SurfaceKind.VISION, SurfaceKind.OCCLUSION, SurfaceKind.CONTROL, SurfaceKind.VALUE}
)


@dataclass(frozen=True)
class PitchGrid:
    """Regular grid over the pitch, origin at the centre spot.

    Cell ``(col, row)`` has its centre at
    ``x = -L/2 + (col + 0.5) * cell``, ``y = -W/2 + (row + 0.5) * cell``.
    Arrays over the grid are indexed ``[row, col]``.
    """

    width_cells: int = 105
    height_cells: int = 68
    cell_size_m: float = 1.0

    def __post_init__(self):
        if self.width_cells <= 0 or self.height_cells <= 0 or self.cell_size_m <= 0:
            raise GazeGridError("grid dimensions must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height_cells, self.width_cells)

    @property
    def n_cells(self) -> int:
        return self.width_cells * self.height_cells

    @property
    def length_m(self) -> float:
        return self.width_cells * self.cell_size_m

    @property
    def width_m(self) -> float:
        return self.height_cells * self.cell_size_m

    @property
    def x_min(self) -> float:
        return -self.length_m / 2.0

    @property
    def y_min(self) -> float:
        return -self.width_m / 2.0

    @cached_property
    def x_centers(self) -> np.ndarray:
        xs = self.x_min + (np.arange(self.width_cells) + 0.5) * self.cell_size_m
        xs.flags.writeable = False
        return xs

    @cached_property
    def y_centers(self) -> np.ndarray:
        ys = self.y_min + (np.arange(self.height_cells) + 0.5) * self.cell_size_m
        ys.flags.writeable = False
        return ys

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` cell-centre coordinates, each shaped ``(rows, cols)``."""
        X, Y = np.meshgrid(self.x_centers, self.y_centers)
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    def center(self, col: int, row: int) -> tuple[float, float]:
        return float(self.x_centers[col]), float(self.y_centers[row])

    def contains(self, x: float, y: float) -> bool:
        return (
            self.x_min <= x <= -self.x_min and self.y_min <= y <= -self.y_min
        )

    def cell_of(self, x: float, y: float) -> Optional[tuple[int, int]]:
        """Return the ``(col, row)`` containing the point, or None off-pitch."""
        if not self.contains(x, y):
            return None
        col = min(int(math.floor((x - self.x_min) / self.cell_size_m)), self.width_cells - 1)
        row = min(int(math.floor((y - self.y_min) / self.cell_size_m)), self.height_cells - 1)
        return col, row

    def nearest_cell(self, x: float, y: float) -> tuple[int, int]:
        col = int(math.floor((x - self.x_min) / self.cell_size_m))
        row = int(math.floor((y - self.y_min) / self.cell_size_m))
        return (
            min(max(col, 0), self.width_cells - 1),
            min(max(row, 0), self.height_cells - 1),
        )


DEFAULT_GRID = PitchGrid()


@dataclass(frozen=True, eq=False)
class Surface:
    """Real-valued field over a :class:`PitchGrid`; values are read-only."""

    values: np.ndarray
    kind: SurfaceKind = SurfaceKind.GENERIC
    grid: PitchGrid = DEFAULT_GRID

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise GazeGridError(
                f"surface shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GazeGridError("surface contains non-finite values")
        kind = SurfaceKind(self.kind)
        if kind in PROBABILITY_KINDS and (values.min() < 0.0 or values.max() > 1.0):
            raise GazeGridError(f"{kind.value} surface has values outside [0, 1]")
        if values is self.values and values.flags.writeable:
            values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", kind)

    def __mul__(self, other: "Surface") -> "Surface":
        _check_same_grid(self, other)
        kind = self.kind if self.kind == other.kind else SurfaceKind.GENERIC
        return Surface(self.values * other.values, kind, self.grid)

    def at(self, col: int, row: int) -> float:
        return float(self.values[row, col])

    def total(self) -> float:
        return float(self.values.sum())

    @classmethod
    def full(cls, fill: float, kind=SurfaceKind.GENERIC, grid: PitchGrid = DEFAULT_GRID):
        return cls(np.full(grid.shape, fill, dtype=np.float64), kind, grid)


def _check_same_grid(a: Surface, b: Surface) -> None:
    if a.grid != b.grid:
        raise GazeGridError("surfaces live on different grids")


@dataclass(frozen=True)
class PlayerState:
    """One player at one instant. Angles in radians; ``None`` marks a missing reading."""

    player_id: str
    team: Team
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    speed: float = 0.0
    head_angle: Optional[float] = None
    shoulder_angle: Optional[float] = None
    hip_angle: Optional[float] = None
    position_label: Optional[str] = None
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "team", Team(self.team))
        for name in ("head_angle", "shoulder_angle", "hip_angle"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, normalize_angle(value))
        if self.speed < 0:
            raise GazeGridError("negative speed")
        x, y = self.position
        if abs(x) > PITCH_LENGTH_M / 2 + PITCH_MARGIN_M or abs(y) > PITCH_WIDTH_M / 2 + PITCH_MARGIN_M:
            raise GazeGridError(f"player {self.player_id} at {self.position} is off the pitch")

    @property
    def has_angles(self) -> bool:
        return self.head_angle is not None and self.shoulder_angle is not None

    def replace(self, **changes) -> "PlayerState":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Frame:
    frame_id: int
    timestamp_s: float
    ball: tuple[float, float]
    players: tuple[PlayerState, ...]

    def __post_init__(self):
        players = tuple(self.players)
        ids = [p.player_id for p in players]
        if len(set(ids)) != len(ids):
            raise GazeGridError(f"duplicate player ids in frame {self.frame_id}")
        object.__setattr__(self, "players", players)

    def player(self, player_id: str) -> PlayerState:
        for p in self.players:
            if p.player_id == player_id:
                return p
        raise GazeGridError(f"player {player_id!r} not in frame {self.frame_id}")

    def has_player(self, player_id: str) -> bool:
        return any(p.player_id == player_id for p in self.players)

    def team(self, team: Team) -> list[PlayerState]:
        return sorted((p for p in self.players if p.team == team), key=lambda p: p.player_id)

    def replace(self, **changes) -> "Frame":
        from dataclasses import replace

        return replace(self, **changes)


def check_sequence(frames: Sequence[Frame]) -> None:
    for prev, cur in zip(frames, frames[1:]):
        if cur.frame_id <= prev.frame_id:
            raise GazeGridError(f"frame ids not strictly increasing at {cur.frame_id}")
        if cur.timestamp_s < prev.timestamp_s:
            raise GazeGridError(f"timestamps decrease at frame {cur.frame_id}")


# --- angles -----------------------------------------------------------------


def normalize_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]. Idempotent bit-for-bit."""
    r = math.remainder(theta, TAU)
    if r <= -math.pi:
        r += TAU
    return r


def wrap_difference(a, b):
    """Signed shortest difference ``a - b`` for angles already in (-pi, pi]."""
    d = np.subtract(a, b)
    d = np.where(d > math.pi, d - TAU, d)
    d = np.where(d <= -math.pi, d + TAU, d)
    if np.ndim(d) == 0:
        return float(d)
    return d


def angle_to(p_from: tuple[float, float], p_to: tuple[float, float]) -> float:
    dx = p_to[0] - p_from[0]
    dy = p_to[1] - p_from[1]
    if dx == 0.0 and dy == 0.0:
        raise GazeGridError("degenerate direction")
    return normalize_angle(math.atan2(dy, dx))


def interpolate_angles(
    series: Sequence[tuple[float, Optional[float]]],
    return_flags: bool = False,
):
    """Fill missing angles along the shortest arc.

    Gaps are filled by linearly interpolating ``cos`` and ``sin`` in time
    between the nearest present neighbours and recovering the angle with
    ``atan2``. Leading and trailing gaps copy the nearest present value.
    If the interpolated vector nearly vanishes (antipodal neighbours) the
    earlier neighbour's angle is used and the sample is flagged.

    Returns a list of ``(timestamp, angle)``; with ``return_flags`` also a
    list of booleans marking the antipodal fallbacks.
    """
    times = [float(t) for t, _ in series]
    present = [i for i, (_, a) in enumerate(series) if a is not None]
    if not present:
        raise GazeGridError("no angle data")

    out: list[tuple[float, float]] = []
    flags = [False] * len(series)
    nxt = 0  # index into present of the first present sample at or after i
    for i, (t, angle) in enumerate(series):
        while nxt < len(present) and present[nxt] < i:
            nxt += 1
        if angle is not None:
            out.append((times[i], normalize_angle(angle)))
            continue
        if nxt == 0:
            out.append((times[i], normalize_angle(series[present[0]][1])))
            continue
        if nxt == len(present):
            out.append((times[i], normalize_angle(series[present[-1]][1])))
            continue
        i0, i1 = present[nxt - 1], present[nxt]
        a0, a1 = series[i0][1], series[i1][1]
        t0, t1 = times[i0], times[i1]
        w = 0.5 if t1 == t0 else (times[i] - t0) / (t1 - t0)
        c = (1.0 - w) * math.cos(a0) + w * math.cos(a1)
        s = (1.0 - w) * math.sin(a0) + w * math.sin(a1)
        if math.hypot(c, s) < 1e-6:
            flags[i] = True
            logger.debug("antipodal angle interpolation at t=%s", t)
            out.append((times[i], normalize_angle(a0)))
        else:
            out.append((times[i], normalize_angle(math.atan2(s, c))))
    if return_flags:
        return out, flags
    return out


# --- kinematics ---------------------------------------------------------------

MAX_PLAYER_SPEED = 12.0


def _contiguous_runs(indices: list[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for idx in indices:
        if runs and idx == runs[-1][-1] + 1:
            runs[-1].append(idx)
        else:
            runs.append([idx])
    return runs


def derive_kinematics(
    frames: Sequence[Frame],
    smoothing_window: int = 5,
    max_speed: float = MAX_PLAYER_SPEED,
) -> list[Frame]:
    """Recompute every player's velocity and speed from positions.

    Velocities use central differences (one-sided at the ends of each
    contiguous presence run), then a centred moving average of
    ``smoothing_window`` frames truncated at run boundaries. Speeds are
    clamped to ``max_speed`` by rescaling the velocity vector. A player seen
    in an isolated frame gets zero velocity and a ``no_velocity`` flag.
    """
    if len(frames) < 2:
        raise GazeGridError("need at least 2 frames")
    if smoothing_window < 1 or smoothing_window % 2 == 0:
        raise GazeGridError("smoothing_window must be odd and >= 1")
    check_sequence(frames)

    times = np.array([f.timestamp_s for f in frames], dtype=np.float64)
    presence: dict[str, list[int]] = {}
    for k, frame in enumerate(frames):
        for p in frame.players:
            presence.setdefault(p.player_id, []).append(k)

    updates: dict[tuple[int, str], tuple[tuple[float, float], float, bool]] = {}
    half = smoothing_window // 2
    for pid, idxs in presence.items():
        for run in _contiguous_runs(idxs):
            if len(run) == 1:
                updates[(run[0], pid)] = ((0.0, 0.0), 0.0, True)
                continue
            pos = np.array([frames[k].player(pid).position for k in run], dtype=np.float64)
            t = times[run]
            n = len(run)
            raw = np.empty_like(pos)
            for m in range(n):
                lo, hi = max(m - 1, 0), min(m + 1, n - 1)
                dt = t[hi] - t[lo]
                raw[m] = (pos[hi] - pos[lo]) / dt if dt > 0 else 0.0
            smooth = np.empty_like(raw)
            for m in range(n):
                lo, hi = max(m - half, 0), min(m + half, n - 1)
                smooth[m] = raw[lo : hi + 1].mean(axis=0)
            for m, k in enumerate(run):
                vx, vy = float(smooth[m, 0]), float(smooth[m, 1])
                speed = math.hypot(vx, vy)
                if speed > max_speed:
                    scale = max_speed / speed
                    vx, vy = vx * scale, vy * scale
                    speed = math.hypot(vx, vy)
                updates[(k, pid)] = ((vx, vy), speed, False)

    out = []
    for k, frame in enumerate(frames):
        players = []
        for p in frame.players:
            vel, speed, flagged = updates[(k, p.player_id)]
            flags = p.flags | {"no_velocity"} if flagged else p.flags - {"no_velocity"}
            players.append(p.replace(velocity=vel, speed=speed, flags=frozenset(flags)))
        out.append(frame.replace(players=tuple(players)))
    return out


def interpolate_frame_angles(frames: Sequence[Frame]) -> list[Frame]:
    """Fill each player's missing head/shoulder/hip angles across the sequence.

    Players with no reading at all for an angle keep ``None`` and are
    flagged ``missing_<angle>``.
    """
    series: dict[str, list[int]] = {}
    for k, frame in enumerate(frames):
        for p in frame.players:
            series.setdefault(p.player_id, []).append(k)

    filled: dict[tuple[int, str], dict] = {}
    for pid, idxs in series.items():
        for name in ("head_angle", "shoulder_angle", "hip_angle"):
            raw = [(frames[k].timestamp_s, getattr(frames[k].player(pid), name)) for k in idxs]
            if all(a is None for _, a in raw):
                for k in idxs:
                    filled.setdefault((k, pid), {})[name] = None
                continue
            values, flags = interpolate_angles(raw, return_flags=True)
            for k, (_, a), flag, (_, orig) in zip(idxs, values, flags, raw):
                entry = filled.setdefault((k, pid), {})
                entry[name] = a
                if orig is None:
                    entry.setdefault("_flags", set()).add(f"interpolated_{name}")
                if flag:
                    entry.setdefault("_flags", set()).add(f"antipodal_{name}")

    out = []
    for k, frame in enumerate(frames):
        players = []
        for p in frame.players:
            entry = dict(filled[(k, p.player_id)])
            extra = entry.pop("_flags", set())
            flags = set(p.flags) | extra
            for name, value in entry.items():
                if value is None:
                    flags.add(f"missing_{name}")
                else:
                    flags.discard(f"missing_{name}")
            players.append(p.replace(flags=frozenset(flags), **entry))
        out.append(frame.replace(players=tuple(players)))
    return out


def sorted_players(players: Iterable[PlayerState]) -> list[PlayerState]:
    return sorted(players, key=lambda p: p.player_id)
