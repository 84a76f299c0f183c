"""Event/tracking fusion: synchronisation, receptions, phases and head-turn events."""

from __future__ import annotations

import bisect
import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import Frame, GazeGridError, wrap_difference

logger = logging.getLogger(__name__)


class EventType(str, enum.Enum):
    PASS = "pass"
    RECEPTION = "reception"
    CARRY_OR_DRIBBLE = "carry_or_dribble"
    SHOT = "shot"
    SET_PIECE = "set_piece"
    OTHER = "other"


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    UNKNOWN = "unknown"


RELEASE_TYPES = frozenset({EventType.PASS, EventType.SHOT})


@dataclass(frozen=True)
class MatchEvent:
    event_id: str
    type: EventType
    timestamp_s: float
    team_id: str
    player_id: str
    receiver_id: Optional[str] = None
    location: tuple[float, float] = (0.0, 0.0)
    outcome: Outcome = Outcome.UNKNOWN

    def __post_init__(self):
        object.__setattr__(self, "type", EventType(self.type))
        object.__setattr__(self, "outcome", Outcome(self.outcome))


class PhaseKind(str, enum.Enum):
    AWAITING = "awaiting"
    ON_BALL = "on_ball"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    player_id: str
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise GazeGridError("phase ends before it starts")

    @property
    def t_await_start(self) -> int:
        return self.t_start

    @property
    def t_on_ball_end(self) -> int:
        return self.t_end


class PhasePair(NamedTuple):
    """An awaiting phase ``[pass, reception)`` and the on-ball phase that follows."""

    awaiting: Phase
    on_ball: Phase
    pass_event: MatchEvent
    reception_time_s: float


@dataclass(frozen=True)
class VeaEvent:
    player_id: str
    frame_id: int
    angular_velocity: float  # deg/s, peak magnitude over the run
    end_frame_id: int


class ReceptionNotFound(GazeGridError):
    pass


def _frame_interval(frames: Sequence[Frame]) -> float:
    if len(frames) < 2:
        return 0.0
    return float(np.median(np.diff([f.timestamp_s for f in frames])))


def sync_events(
    events: Sequence[MatchEvent],
    frames: Sequence[Frame],
    dropped: Optional[list] = None,
) -> list[tuple[MatchEvent, int]]:
    """Assign each event to the frame nearest in time (ties go to the earlier frame).

    Events more than half a frame interval outside the tracking range are
    dropped and, if ``dropped`` is given, appended to it.
    """
    if not events or not frames:
        raise GazeGridError("need events and frames to synchronise")
    times = [f.timestamp_s for f in frames]
    tol = _frame_interval(frames) / 2.0
    lo, hi = times[0] - tol, times[-1] + tol
    if all(e.timestamp_s < lo or e.timestamp_s > hi for e in events):
        raise GazeGridError("events and tracking do not overlap in time")

    out = []
    for event in events:
        t = event.timestamp_s
        if t < lo or t > hi:
            logger.warning("dropping event %s at %.2fs outside tracking range", event.event_id, t)
            if dropped is not None:
                dropped.append(event)
            continue
        k = bisect.bisect_left(times, t)
        if k == 0:
            best = 0
        elif k == len(times):
            best = k - 1
        else:
            best = k if times[k] - t < t - times[k - 1] else k - 1
        out.append((event, frames[best].frame_id))
    return out


def _ball_distance(frame: Frame, player_id: str) -> Optional[float]:
    if not frame.has_player(player_id):
        return None
    px, py = frame.player(player_id).position
    return math.hypot(px - frame.ball[0], py - frame.ball[1])


def _index_of(frames: Sequence[Frame], frame_id: int) -> int:
    ids = [f.frame_id for f in frames]
    k = bisect.bisect_left(ids, frame_id)
    if k == len(ids) or ids[k] != frame_id:
        raise GazeGridError(f"unknown frame {frame_id}")
    return k


def detect_reception(
    pass_frame: int,
    receiver_id: str,
    frames: Sequence[Frame],
    window_s: float = 10.0,
) -> int:
    """First local minimum of receiver-to-ball distance after the pass frame."""
    k0 = _index_of(frames, pass_frame)
    if not any(f.has_player(receiver_id) for f in frames[k0 + 1 :]):
        raise GazeGridError(f"receiver {receiver_id!r} absent after frame {pass_frame}")
    t0 = frames[k0].timestamp_s
    for k in range(k0 + 1, len(frames) - 1):
        if frames[k].timestamp_s - t0 > window_s:
            break
        d_prev = _ball_distance(frames[k - 1], receiver_id)
        d_cur = _ball_distance(frames[k], receiver_id)
        d_next = _ball_distance(frames[k + 1], receiver_id)
        if d_prev is None or d_cur is None or d_next is None:
            continue
        if d_prev > d_cur <= d_next:
            return frames[k].frame_id
    raise ReceptionNotFound("reception not found")


def _nearest_to_ball(frame: Frame) -> Optional[str]:
    best, best_d = None, math.inf
    for p in sorted(frame.players, key=lambda p: p.player_id):
        d = math.hypot(p.position[0] - frame.ball[0], p.position[1] - frame.ball[1])
        if d < best_d:
            best, best_d = p.player_id, d
    return best


def _release_frame(
    receiver_id: str,
    k_rec: int,
    frames: Sequence[Frame],
    synced: Sequence[tuple[MatchEvent, int]],
    window_s: float,
) -> int:
    t_rec = frames[k_rec].timestamp_s
    rec_id = frames[k_rec].frame_id
    for event, frame_id in synced:
        if (
            event.player_id == receiver_id
            and event.type in RELEASE_TYPES
            and frame_id >= rec_id
            and t_rec <= event.timestamp_s <= t_rec + window_s
        ):
            return frame_id
    # no release event: last frame of the run in which the receiver stays nearest the ball
    last = rec_id
    for frame in frames[k_rec:]:
        if frame.timestamp_s - t_rec > window_s or _nearest_to_ball(frame) != receiver_id:
            break
        last = frame.frame_id
    return last


def extract_phases(
    events: Sequence[MatchEvent],
    frames: Sequence[Frame],
    reception_window_s: float = 10.0,
    release_window_s: float = 15.0,
    synced: Optional[Sequence[tuple[MatchEvent, int]]] = None,
    dropped: Optional[list] = None,
) -> list[PhasePair]:
    """Awaiting/on-ball phase pairs for every successful pass with a known receiver."""
    if synced is None:
        synced = sync_events(events, frames)
    synced = sorted(synced, key=lambda ef: (ef[0].timestamp_s, ef[1]))
    pairs = []
    for event, pass_frame in synced:
        if event.type != EventType.PASS or event.outcome != Outcome.SUCCESS or not event.receiver_id:
            continue
        try:
            rec_frame = detect_reception(pass_frame, event.receiver_id, frames, reception_window_s)
        except GazeGridError as exc:
            logger.info("dropping pass %s: %s", event.event_id, exc)
            if dropped is not None:
                dropped.append(event)
            continue
        k_rec = _index_of(frames, rec_frame)
        release = _release_frame(event.receiver_id, k_rec, frames, synced, release_window_s)
        pairs.append(
            PhasePair(
                awaiting=Phase(PhaseKind.AWAITING, event.receiver_id, pass_frame, rec_frame),
                on_ball=Phase(PhaseKind.ON_BALL, event.receiver_id, rec_frame, release),
                pass_event=event,
                reception_time_s=frames[k_rec].timestamp_s,
            )
        )
    return pairs


def filter_open_play(
    pairs: Sequence[PhasePair],
    events: Sequence[MatchEvent],
    set_piece_gap_s: float = 7.0,
    require_uncontested: bool = True,
) -> list[PhasePair]:
    """Keep pairs in open play.

    A pair survives when its pass comes at least ``set_piece_gap_s`` after
    the latest set piece, its possession sequence holds a successful pass,
    and (optionally) no opponent event falls between pass and reception.
    """
    ordered = sorted(events, key=lambda e: e.timestamp_s)
    set_pieces = [e.timestamp_s for e in ordered if e.type == EventType.SET_PIECE]
    kept = []
    for pair in pairs:
        pe = pair.pass_event
        t = pe.timestamp_s
        k = bisect.bisect_right(set_pieces, t)
        if k > 0 and t - set_pieces[k - 1] < set_piece_gap_s:
            continue
        if not _possession_has_pass(pe, ordered):
            continue
        if require_uncontested and any(
            e.team_id != pe.team_id and t < e.timestamp_s <= pair.reception_time_s for e in ordered
        ):
            continue
        kept.append(pair)
    return kept


def _possession_has_pass(pass_event: MatchEvent, ordered: Sequence[MatchEvent]) -> bool:
    # a possession sequence restarts at any set piece or opponent event
    successes = 0
    for e in ordered:
        if e.timestamp_s > pass_event.timestamp_s:
            break
        if e.team_id != pass_event.team_id or e.type == EventType.SET_PIECE:
            successes = 0
        elif e.type == EventType.PASS and e.outcome == Outcome.SUCCESS:
            successes += 1
    return successes >= 1


def head_angular_velocity(frames: Sequence[Frame], player_id: str, window=None):
    """Per-frame head angular velocity in deg/s.

    Returns ``(frame_ids, velocities)``; the first frame of each contiguous
    run of readings has no velocity and is omitted.
    """
    ids, vel = [], []
    prev = None
    for frame in frames:
        if window is not None and not (window[0] <= frame.frame_id <= window[1]):
            prev = None
            continue
        if not frame.has_player(player_id) or frame.player(player_id).head_angle is None:
            prev = None
            continue
        head = frame.player(player_id).head_angle
        if prev is not None:
            dt = frame.timestamp_s - prev[0]
            if dt > 0:
                ids.append(frame.frame_id)
                vel.append(math.degrees(wrap_difference(head, prev[1])) / dt)
        prev = (frame.timestamp_s, head)
    return ids, vel


def merge_vea_runs(player_id: str, frame_ids, mask, velocities) -> list[VeaEvent]:
    """Collapse runs of consecutive flagged samples into single events."""
    events = []
    run: list[int] = []
    for k, flagged in enumerate(mask):
        if flagged:
            run.append(k)
            continue
        if run:
            events.append(_vea_from_run(player_id, frame_ids, velocities, run))
            run = []
    if run:
        events.append(_vea_from_run(player_id, frame_ids, velocities, run))
    return events


def _vea_from_run(player_id, frame_ids, velocities, run) -> VeaEvent:
    peak = max(abs(velocities[k]) for k in run)
    return VeaEvent(player_id, frame_ids[run[0]], peak, frame_ids[run[-1]])


def detect_vea(
    frames: Sequence[Frame],
    player_id: str,
    window=None,
    threshold_deg_s: float = 125.0,
) -> list[VeaEvent]:
    ids, vel = head_angular_velocity(frames, player_id, window)
    mask = [abs(v) > threshold_deg_s for v in vel]
    return merge_vea_runs(player_id, ids, mask, vel)
