"""Synthetic tracking and event data: random frames for benchmarks and a scripted mini-match.

The mini-match (attack toward +x, 25 frames/s, 20 s) runs:

* 0.0 s  free kick A1 -> A2 (set piece)
* 3.0 s  pass A2 -> A3, too soon after the free kick to count as open play
* 8.0 s  pass A3 -> A4, received after 1.2 s
* 12.0 s pass A4 -> A5, received after 1.0 s
* 16.0 s pass A5 -> A6, cut out by defender D1 at 16.6 s

Receivers stand still while waiting, scanning their head +-60 deg around
the ball at 240 deg/s, then dribble at ``DRIBBLE_SPEED`` toward their
scripted heading until they release the ball. Everybody else stands still
facing the ball. Velocities are derived from the positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Frame, PlayerState, Team, derive_kinematics
from .phases import EventType, MatchEvent, Outcome

FRAME_RATE = 25.0
DRIBBLE_SPEED = 2.0
BALL_OFFSET_M = 0.5
SCAN_AMPLITUDE = math.radians(60.0)
SCAN_RATE = math.radians(240.0)


def random_frame(
    rng: np.random.Generator,
    frame_id: int = 0,
    per_team: int = 11,
    timestamp_s: Optional[float] = None,
) -> Frame:
    """Players scattered uniformly over the pitch with random speeds and angles."""
    players = []
    for team, prefix in ((Team.ATTACKING, "A"), (Team.DEFENDING, "D")):
        for k in range(per_team):
            speed = float(rng.uniform(0.0, 8.0))
            heading = float(rng.uniform(-math.pi, math.pi))
            head = float(rng.uniform(-math.pi, math.pi))
            players.append(
                PlayerState(
                    player_id=f"{prefix}{k + 1:02d}",
                    team=team,
                    position=(float(rng.uniform(-50.0, 50.0)), float(rng.uniform(-32.0, 32.0))),
                    velocity=(speed * math.cos(heading), speed * math.sin(heading)),
                    speed=speed,
                    head_angle=head,
                    shoulder_angle=head + math.pi / 2.0 + float(rng.normal(0.0, 0.3)),
                )
            )
    ball = (float(rng.uniform(-50.0, 50.0)), float(rng.uniform(-32.0, 32.0)))
    ts = frame_id / FRAME_RATE if timestamp_s is None else timestamp_s
    return Frame(frame_id=frame_id, timestamp_s=ts, ball=ball, players=tuple(players))


def random_frames(n: int, seed: int = 0, per_team: int = 11) -> list[Frame]:
    rng = np.random.default_rng(seed)
    return [random_frame(rng, k, per_team) for k in range(n)]


# --- scripted mini-match --------------------------------------------------------

START = {
    "A1": (-20.0, -10.0),
    "A2": (-12.0, 6.0),
    "A3": (0.0, -8.0),
    "A4": (12.0, 4.0),
    "A5": (20.0, -12.0),
    "A6": (30.0, 10.0),
    "D1": (26.0, 2.0),
    "D2": (34.0, -6.0),
    "D3": (38.0, 8.0),
    "D4": (18.0, 14.0),
    "D5": (44.0, 0.0),
}
POSITION_LABELS = {
    "A1": "center_back",
    "A2": "wide_back",
    "A3": "central_midfielder",
    "A4": "central_midfielder",
    "A5": "wide_forward",
    "A6": "center_forward",
}


@dataclass(frozen=True)
class ScriptedPass:
    event_id: str
    passer: str
    receiver: str
    t_pass: float
    flight_s: float
    dribble_heading_deg: float
    set_piece: bool = False
    intercepted_by: Optional[str] = None


SCRIPT = (
    ScriptedPass("e1", "A1", "A2", 0.0, 1.0, 0.0, set_piece=True),
    ScriptedPass("e2", "A2", "A3", 3.0, 1.0, 0.0),
    # A4 dribbles toward goal, A5 back toward its own half
    ScriptedPass("e3", "A3", "A4", 8.0, 1.2, 0.0),
    ScriptedPass("e4", "A4", "A5", 12.0, 1.0, 180.0),
    ScriptedPass("e5", "A5", "A6", 16.0, 0.6, 0.0, intercepted_by="D1"),
)
DURATION_S = 20.0


def _frame_index(t: float) -> int:
    return int(round(t * FRAME_RATE))


def mini_match_frames() -> list[Frame]:
    n = _frame_index(DURATION_S) + 1
    pos = {pid: np.tile(np.array(p, dtype=np.float64), (n, 1)) for pid, p in START.items()}
    ball = np.zeros((n, 2))
    holder = np.array([""] * n, dtype=object)
    awaiting = np.array([""] * n, dtype=object)

    for k, step in enumerate(SCRIPT):
        k0 = _frame_index(step.t_pass)
        k_arrive = _frame_index(step.t_pass + step.flight_s)
        k_next = _frame_index(SCRIPT[k + 1].t_pass) if k + 1 < len(SCRIPT) else n - 1
        target_id = step.intercepted_by or step.receiver
        start_ball = ball[k0 - 1] if k0 > 0 else pos[step.passer][0]
        receiver_pos = pos[target_id][k0]
        toward = start_ball - receiver_pos
        end_ball = receiver_pos + BALL_OFFSET_M * toward / np.linalg.norm(toward)
        for f in range(k0, k_arrive + 1):
            s = (f - k0) / (k_arrive - k0)
            ball[f] = start_ball + s * (end_ball - start_ball)
            awaiting[f] = target_id if f < k_arrive else ""
        heading = math.radians(step.dribble_heading_deg)
        step_m = DRIBBLE_SPEED / FRAME_RATE * np.array([math.cos(heading), math.sin(heading)])
        last = n - 1 if step.intercepted_by else k_next - 1
        for f in range(k_arrive, last + 1):
            pos[target_id][f] = receiver_pos + (f - k_arrive) * step_m
            ball[f] = end_ball + (f - k_arrive) * step_m
            holder[f] = target_id
        for f in range(last + 1, n):
            pos[target_id][f] = pos[target_id][last]
    frames = []
    for f in range(n):
        t = f / FRAME_RATE
        players = []
        for pid, track in pos.items():
            x, y = float(track[f, 0]), float(track[f, 1])
            to_ball = math.atan2(ball[f, 1] - y, ball[f, 0] - x)
            if holder[f] == pid:
                facing = math.atan2(step_dir(pos[pid], f)[1], step_dir(pos[pid], f)[0])
            else:
                facing = to_ball
            head = facing
            if awaiting[f] == pid:
                head = to_ball + SCAN_AMPLITUDE * _triangle(SCAN_RATE * t / SCAN_AMPLITUDE)
            team = Team.ATTACKING if pid.startswith("A") else Team.DEFENDING
            players.append(
                PlayerState(
                    player_id=pid,
                    team=team,
                    position=(x, y),
                    head_angle=head,
                    shoulder_angle=facing + math.pi / 2.0,
                    position_label=POSITION_LABELS.get(pid),
                )
            )
        frames.append(
            Frame(frame_id=f, timestamp_s=round(t, 6), ball=(float(ball[f, 0]), float(ball[f, 1])), players=tuple(players))
        )
    return derive_kinematics(frames)


def step_dir(track: np.ndarray, f: int) -> np.ndarray:
    """Direction of travel at frame ``f``; the previous step when standing still."""
    for lo, hi in ((f, f + 1), (f - 1, f)):
        if 0 <= lo and hi < len(track):
            d = track[hi] - track[lo]
            if np.any(d != 0):
                return d
    return np.array([1.0, 0.0])


def _triangle(phase: float) -> float:
    """Triangle wave in [-1, 1] with period 4 and slope +-1."""
    p = phase % 4.0
    if p < 1.0:
        return p
    if p < 3.0:
        return 2.0 - p
    return p - 4.0


def mini_match_events() -> list[MatchEvent]:
    events = []
    for step in SCRIPT:
        start = START[step.passer]
        kind = EventType.SET_PIECE if step.set_piece else EventType.PASS
        outcome = Outcome.FAILURE if step.intercepted_by else Outcome.SUCCESS
        events.append(
            MatchEvent(
                event_id=step.event_id,
                type=kind,
                timestamp_s=step.t_pass,
                team_id="A",
                player_id=step.passer,
                receiver_id=step.receiver,
                location=start,
                outcome=outcome,
            )
        )
        if step.intercepted_by:
            events.append(
                MatchEvent(
                    event_id=f"{step.event_id}i",
                    type=EventType.OTHER,
                    timestamp_s=step.t_pass + step.flight_s,
                    team_id="D",
                    player_id=step.intercepted_by,
                    location=START[step.intercepted_by],
                    outcome=Outcome.SUCCESS,
                )
            )
    return sorted(events, key=lambda e: e.timestamp_s)
