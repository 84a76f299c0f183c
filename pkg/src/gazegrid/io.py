"""File formats: tracking JSONL, events CSV, binary surfaces, value stores, heatmaps.

Surface file (little-endian)::

    0   8  magic   b"GZGSURF\\0"
    8   4  u32     format version (1)
    12  4  u32     kind code (0 vision, 1 occlusion, 2 control, 3 value, 4 generic)
    16  4  u32     width (columns)
    20  4  u32     height (rows)
    24  .  f32     width*height values, row-major, row 0 = lowest y

Value-surface store::

    0   8  magic   b"GZGVALS\\0"
    8   4  u32     format version (1)
    12  4  u32     record count n
    16  4  u32     grid width
    20  4  u32     grid height
    24  .  n x (u32 col, u32 row, u64 offset)   index, sorted by (row, col)
    ..  .  n surface records (surface file layout above), at their offsets
"""

from __future__ import annotations

import csv
import json
import logging
import math
import mmap
import struct
import warnings
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import (
    DEFAULT_GRID,
    Frame,
    GazeGridError,
    PitchGrid,
    PlayerState,
    Surface,
    SurfaceKind,
    check_sequence,
)
from .phases import EventType, MatchEvent, Outcome

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SURFACE_MAGIC = b"GZGSURF\x00"
STORE_MAGIC = b"GZGVALS\x00"
FORMAT_VERSION = 1
KIND_CODES = {
    SurfaceKind.VISION: 0,
    SurfaceKind.OCCLUSION: 1,
    SurfaceKind.CONTROL: 2,
    SurfaceKind.VALUE: 3,
    SurfaceKind.GENERIC: 4,
}
CODE_KINDS = {v: k for k, v in KIND_CODES.items()}
_HEADER = struct.Struct("<8sIIII")
_INDEX_ENTRY = struct.Struct("<IIQ")


# --- surfaces ---------------------------------------------------------------


def surface_to_bytes(surface: Surface) -> bytes:
    grid = surface.grid
    header = _HEADER.pack(
        SURFACE_MAGIC, FORMAT_VERSION, KIND_CODES[surface.kind], grid.width_cells, grid.height_cells
    )
    return header + surface.values.astype("<f4").tobytes(order="C")


def surface_from_bytes(data, grid: Optional[PitchGrid] = None) -> Surface:
    if len(data) < _HEADER.size:
        raise GazeGridError("truncated surface header")
    magic, version, kind, width, height = _HEADER.unpack_from(data, 0)
    if magic != SURFACE_MAGIC:
        raise GazeGridError("not a surface file")
    if version != FORMAT_VERSION:
        raise GazeGridError(f"unsupported surface version {version}")
    n = width * height
    end = _HEADER.size + 4 * n
    if len(data) < end:
        raise GazeGridError("truncated surface data")
    values = np.frombuffer(data, dtype="<f4", count=n, offset=_HEADER.size)
    if grid is None:
        grid = DEFAULT_GRID if (width, height) == DEFAULT_GRID.shape[::-1] else PitchGrid(width, height)
    elif (grid.width_cells, grid.height_cells) != (width, height):
        raise GazeGridError("surface dimensions do not match grid")
    return Surface(values.reshape(height, width).astype(np.float64), CODE_KINDS[kind], grid)


def write_surface(path: PathLike, surface: Surface) -> None:
    Path(path).write_bytes(surface_to_bytes(surface))


def read_surface(path: PathLike, grid: Optional[PitchGrid] = None) -> Surface:
    return surface_from_bytes(Path(path).read_bytes(), grid)


def write_value_store(path: PathLike, surfaces: Mapping[tuple[int, int], Surface], grid: PitchGrid = DEFAULT_GRID) -> None:
    """Write raw value surfaces keyed by ball cell ``(col, row)``."""
    keys = sorted(surfaces, key=lambda cr: (cr[1], cr[0]))
    blobs = [surface_to_bytes(surfaces[k]) for k in keys]
    offset = _HEADER.size + _INDEX_ENTRY.size * len(keys)
    index = bytearray()
    for (col, row), blob in zip(keys, blobs):
        index += _INDEX_ENTRY.pack(col, row, offset)
        offset += len(blob)
    header = _HEADER.pack(STORE_MAGIC, FORMAT_VERSION, len(keys), grid.width_cells, grid.height_cells)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(index)
        for blob in blobs:
            fh.write(blob)


class ValueSurfaceStore:
    """Read-only, memory-mapped lookup of value surfaces by ball cell."""

    def __init__(self, path: PathLike):
        self.path = Path(path)
        with open(self.path, "rb") as fh:
            self._map = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ)
        magic, version, count, width, height = _HEADER.unpack_from(self._map, 0)
        if magic != STORE_MAGIC:
            raise GazeGridError("not a value-surface file")
        if version != FORMAT_VERSION:
            raise GazeGridError(f"unsupported value-surface version {version}")
        self.width, self.height = width, height
        self._index = {}
        for k in range(count):
            col, row, offset = _INDEX_ENTRY.unpack_from(self._map, _HEADER.size + k * _INDEX_ENTRY.size)
            self._index[(col, row)] = offset

    def __contains__(self, cell) -> bool:
        return tuple(cell) in self._index

    def __len__(self) -> int:
        return len(self._index)

    def get(self, cell: tuple[int, int], grid: PitchGrid = DEFAULT_GRID) -> Surface:
        try:
            offset = self._index[tuple(cell)]
        except KeyError:
            raise GazeGridError("no value surface for ball location") from None
        surface = surface_from_bytes(memoryview(self._map)[offset:], grid)
        return Surface(surface.values, SurfaceKind.VALUE, grid)

    def lookup(self, ball, grid: PitchGrid = DEFAULT_GRID) -> Surface:
        return self.get(grid.nearest_cell(*ball), grid)

    def close(self) -> None:
        self._map.close()


# --- heatmaps -----------------------------------------------------------------

# Piecewise-linear colormap, stops at 0, .25, .5, .75, 1 (dark blue -> yellow).
COLORMAP_STOPS = np.array(
    [
        [13, 8, 135],
        [126, 3, 168],
        [204, 71, 120],
        [248, 149, 64],
        [240, 249, 33],
    ],
    dtype=np.float64,
)


def _scaled(surface: Surface, vmin: float, vmax: float) -> np.ndarray:
    v = np.clip((surface.values - vmin) / (vmax - vmin), 0.0, 1.0)
    return v[::-1]  # image row 0 is the top of the pitch (largest y)


def heatmap_pgm(surface: Surface, vmin: float = 0.0, vmax: float = 1.0) -> bytes:
    v = _scaled(surface, vmin, vmax)
    pixels = np.rint(v * 255).astype(np.uint8)
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes()


def heatmap_ppm(surface: Surface, vmin: float = 0.0, vmax: float = 1.0) -> bytes:
    v = _scaled(surface, vmin, vmax) * (len(COLORMAP_STOPS) - 1)
    lo = np.minimum(np.floor(v).astype(int), len(COLORMAP_STOPS) - 2)
    frac = (v - lo)[..., None]
    rgb = COLORMAP_STOPS[lo] * (1 - frac) + COLORMAP_STOPS[lo + 1] * frac
    pixels = np.rint(rgb).astype(np.uint8)
    h, w = pixels.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode() + pixels.tobytes()


# --- tracking -----------------------------------------------------------------


def _deg_or_none(value):
    return None if value is None else math.radians(float(value))


def _parse_player(obj: dict) -> PlayerState:
    flags = set()
    head = _deg_or_none(obj.get("head_deg"))
    if head is None:
        flags.add("missing_head_angle")
    shoulder = _deg_or_none(obj.get("shoulder_deg"))
    if shoulder is None:
        flags.add("missing_shoulder_angle")
    vx, vy = float(obj.get("vx", 0.0)), float(obj.get("vy", 0.0))
    if "vx" not in obj or "vy" not in obj:
        flags.add("no_velocity")
    return PlayerState(
        player_id=str(obj["player_id"]),
        team=obj["team"],
        position=(float(obj["x"]), float(obj["y"])),
        velocity=(vx, vy),
        speed=math.hypot(vx, vy),
        head_angle=head,
        shoulder_angle=shoulder,
        hip_angle=_deg_or_none(obj.get("hip_deg")),
        position_label=obj.get("position"),
        flags=frozenset(flags),
    )


def parse_tracking_lines(lines: Iterable[str], frame_rate: Optional[float] = None) -> list[Frame]:
    frames = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            ball = obj["ball"]
            frame = Frame(
                frame_id=int(obj["frame_id"]),
                timestamp_s=float(obj["timestamp_s"]),
                ball=(float(ball[0]), float(ball[1])),
                players=tuple(_parse_player(p) for p in obj["players"]),
            )
        except (ValueError, KeyError, TypeError, IndexError) as exc:
            raise GazeGridError(f"line {lineno}: malformed tracking record ({exc})") from None
        if frames:
            try:
                check_sequence([frames[-1], frame])
            except GazeGridError as exc:
                raise GazeGridError(f"line {lineno}: {exc}") from None
        frames.append(frame)
    if not frames:
        raise GazeGridError("no frames")
    if frame_rate is not None and len(frames) > 1:
        dt = float(np.median(np.diff([f.timestamp_s for f in frames])))
        observed = 1.0 / dt if dt > 0 else math.inf
        if abs(observed - frame_rate) > 0.01 * frame_rate:
            msg = f"tracking frame rate {observed:.3f} Hz differs from configured {frame_rate} Hz"
            logger.warning(msg)
            warnings.warn(msg, stacklevel=2)
    return frames


def read_tracking(path: PathLike, frame_rate: Optional[float] = None) -> list[Frame]:
    with open(path, encoding="utf-8") as fh:
        return parse_tracking_lines(fh, frame_rate)


def _deg_out(theta):
    return None if theta is None else round(math.degrees(theta), 9)


def frame_to_json(frame: Frame) -> str:
    players = []
    for p in frame.players:
        obj = {
            "player_id": p.player_id,
            "team": p.team.value,
            "x": p.position[0],
            "y": p.position[1],
            "vx": p.velocity[0],
            "vy": p.velocity[1],
        }
        for key, value in (("head_deg", p.head_angle), ("shoulder_deg", p.shoulder_angle), ("hip_deg", p.hip_angle)):
            if value is not None:
                obj[key] = _deg_out(value)
        if p.position_label is not None:
            obj["position"] = p.position_label
        players.append(obj)
    return json.dumps(
        {"frame_id": frame.frame_id, "timestamp_s": frame.timestamp_s, "ball": list(frame.ball), "players": players}
    )


def write_tracking(path: PathLike, frames: Sequence[Frame]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(frame_to_json(frame) + "\n")


# --- events -------------------------------------------------------------------

EVENT_COLUMNS = ["event_id", "type", "timestamp_s", "team_id", "player_id", "receiver_id", "x", "y", "outcome"]


def read_events(path: PathLike) -> list[MatchEvent]:
    events = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EVENT_COLUMNS:
            raise GazeGridError(f"events header must be {','.join(EVENT_COLUMNS)}")
        for lineno, row in enumerate(reader, 2):
            try:
                events.append(
                    MatchEvent(
                        event_id=row["event_id"],
                        type=EventType(row["type"]),
                        timestamp_s=float(row["timestamp_s"]),
                        team_id=row["team_id"],
                        player_id=row["player_id"],
                        receiver_id=row["receiver_id"] or None,
                        location=(float(row["x"]), float(row["y"])),
                        outcome=Outcome(row["outcome"] or "unknown"),
                    )
                )
            except (ValueError, TypeError) as exc:
                raise GazeGridError(f"events line {lineno}: {exc}") from None
    return events


def write_events(path: PathLike, events: Sequence[MatchEvent]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(EVENT_COLUMNS)
        for e in events:
            writer.writerow(
                [
                    e.event_id,
                    e.type.value,
                    repr(e.timestamp_s),
                    e.team_id,
                    e.player_id,
                    e.receiver_id or "",
                    repr(e.location[0]),
                    repr(e.location[1]),
                    e.outcome.value,
                ]
            )
