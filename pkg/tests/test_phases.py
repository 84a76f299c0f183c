import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazegrid.core import Frame, GazeGridError, PlayerState, Team
from gazegrid.phases import (
    EventType,
    MatchEvent,
    Outcome,
    detect_reception,
    detect_vea,
    extract_phases,
    filter_open_play,
    head_angular_velocity,
    merge_vea_runs,
    sync_events,
)

DT = 0.04


def ev(eid, t, kind=EventType.PASS, team="A", player="a1", receiver="a2", outcome=Outcome.SUCCESS):
    return MatchEvent(eid, kind, t, team, player, receiver, (0.0, 0.0), outcome)


def head_trace(step_deg, n=20, start_deg=0.0):
    frames = []
    for k in range(n):
        p = PlayerState("r", Team.ATTACKING, (0.0, 0.0), head_angle=math.radians(start_deg + step_deg * k))
        frames.append(Frame(k, k * DT, (1.0, 0.0), (p,)))
    return frames


def ball_run(receiver_track, ball_track, passer_track=None):
    """Frames for a receiver ``a2`` and passer ``a1`` given per-frame positions."""
    frames = []
    for k, (rp, bp) in enumerate(zip(receiver_track, ball_track)):
        players = [PlayerState("a2", Team.ATTACKING, rp)]
        players.append(PlayerState("a1", Team.ATTACKING, passer_track[k] if passer_track else (-20.0, 0.0)))
        players.append(PlayerState("d1", Team.DEFENDING, (30.0, 20.0)))
        frames.append(Frame(k, k * DT, bp, tuple(players)))
    return frames


def test_sync_nearest_frame_and_ties():
    frames = head_trace(0.0, n=5)
    synced = sync_events([ev("a", 0.05), ev("b", 0.07), ev("c", 0.02)], frames)
    assert [f for _, f in synced] == [1, 2, 0]  # 0.02 is a tie between frames 0 and 1


def test_sync_drops_out_of_range_and_rejects_disjoint():
    frames = head_trace(0.0, n=5)
    dropped = []
    synced = sync_events([ev("a", 0.1), ev("late", 5.0)], frames, dropped)
    assert [e.event_id for e, _ in synced] == ["a"] and [e.event_id for e in dropped] == ["late"]
    with pytest.raises(GazeGridError):
        sync_events([ev("x", 99.0)], frames)


def test_detect_reception_first_local_minimum():
    ball = [(-20.0 + 2.0 * k, 0.0) for k in range(20)]
    frames = ball_run([(0.0, 0.0)] * 20, ball)
    assert detect_reception(0, "a2", frames) == 10


def test_detect_reception_window_and_absent():
    ball = [(-20.0 + 0.1 * k, 0.0) for k in range(20)]
    frames = ball_run([(0.0, 0.0)] * 20, ball)
    with pytest.raises(GazeGridError):
        detect_reception(0, "a2", frames)
    with pytest.raises(GazeGridError):
        detect_reception(0, "nobody", frames)


def test_extract_phases_release_fallback():
    # ball reaches a2 at frame 10 then travels with a2 until a1 is nearer from frame 15
    ball = [(-20.0 + 2.0 * k, 0.0) for k in range(11)] + [(0.0, 0.0)] * 4 + [(-19.0, 0.0)] * 5
    frames = ball_run([(0.0, 0.0)] * 20, ball)
    pairs = extract_phases([ev("p", 0.0)], frames)
    assert len(pairs) == 1
    pair = pairs[0]
    assert (pair.awaiting.t_start, pair.awaiting.t_end, pair.on_ball.t_end) == (0, 10, 14)
    assert pair.awaiting.t_end == pair.on_ball.t_start


def test_extract_phases_release_event_and_skips():
    ball = [(-20.0 + 2.0 * k, 0.0) for k in range(11)] + [(0.0, 0.0)] * 9
    frames = ball_run([(0.0, 0.0)] * 20, ball)
    events = [
        ev("p", 0.0),
        ev("fail", 0.0, outcome=Outcome.FAILURE),
        ev("norecv", 0.0, receiver=None),
        ev("rel", 17 * DT, kind=EventType.SHOT, player="a2", receiver=None),
    ]
    pairs = extract_phases(events, frames)
    assert [p.pass_event.event_id for p in pairs] == ["p"]
    assert pairs[0].on_ball.t_end == 17


def test_filter_open_play_rules():
    ball = [(-20.0 + 2.0 * k, 0.0) for k in range(11)] + [(0.0, 0.0)] * 9
    frames = ball_run([(0.0, 0.0)] * 20, ball)
    (pair,) = extract_phases([ev("p", 0.0)], frames)
    base = [ev("p", 0.0)]
    assert filter_open_play([pair], base) == [pair]
    # a set piece less than 7 s earlier removes it
    sp = [ev("sp", -3.0, kind=EventType.SET_PIECE)] + base
    assert filter_open_play([pair], sp) == []
    assert filter_open_play([pair], [ev("sp", -7.0, kind=EventType.SET_PIECE)] + base) == [pair]
    # an opponent event between pass and reception contests it
    contested = base + [ev("x", 0.2, kind=EventType.OTHER, team="D", player="d1", receiver=None)]
    assert filter_open_play([pair], contested) == []
    assert filter_open_play([pair], contested, require_uncontested=False) == [pair]


def test_head_velocity_wraps():
    frames = head_trace(2.0, n=3, start_deg=179.0)
    ids, vel = head_angular_velocity(frames, "r")
    assert ids == [1, 2]
    assert all(math.isclose(v, 50.0, rel_tol=1e-9) for v in vel)


def test_detect_vea_threshold():
    assert len(detect_vea(head_trace(6.0), "r")) == 1  # 150 deg/s, one merged run
    assert detect_vea(head_trace(4.0), "r") == []  # 100 deg/s


@given(st.lists(st.booleans(), max_size=40))
def test_merge_runs_idempotent(mask):
    ids = list(range(len(mask)))
    vel = [200.0 if m else 10.0 for m in mask]
    events = merge_vea_runs("r", ids, mask, vel)
    runs = sum(1 for k, m in enumerate(mask) if m and (k == 0 or not mask[k - 1]))
    assert len(events) == runs
    # re-merging the onsets of merged events yields the same events
    onset_mask = [any(e.frame_id == i for e in events) for i in ids]
    again = merge_vea_runs("r", ids, onset_mask, vel)
    assert [e.frame_id for e in again] == [e.frame_id for e in events]
