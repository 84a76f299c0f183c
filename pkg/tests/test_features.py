import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazegrid.config import Config
from gazegrid.core import Frame, GazeGridError, PlayerState, Surface, SurfaceKind, Team
from gazegrid.features import (
    CSV_COLUMNS,
    DATASETS,
    FEATURE_COLUMNS,
    FrameAggregates,
    Sample,
    assign_label,
    dataset_csv,
    observed_ratio,
    regular_features,
    standardization_stats,
    value_ratio,
    vea_counts,
    vision_features,
)


def test_observed_ratio():
    c = Surface(np.tile(np.linspace(0, 1, 105), (68, 1)), SurfaceKind.CONTROL)
    v = Surface.full(0.5, SurfaceKind.VISION)
    assert math.isclose(observed_ratio(c, v), 0.5)
    assert observed_ratio(Surface.full(0.0, SurfaceKind.CONTROL), v) == 0.0


@given(st.floats(0, 1e3), st.floats(0, 1e3))
def test_value_ratio_bounds_and_symmetry(a, b):
    if a == 0 and b == 0:
        with pytest.raises(GazeGridError):
            value_ratio(a, b)
        return
    r = value_ratio(a, b)
    assert 0.0 <= r <= 1.0
    assert math.isclose(r + value_ratio(b, a), 1.0, abs_tol=1e-15)


def test_value_ratio_negative_rejected():
    with pytest.raises(GazeGridError):
        value_ratio(-1.0, 1.0)


def test_assign_label_bands_are_strict():
    assert assign_label(0.35) is None and assign_label(0.65) is None
    assert assign_label(0.3499) == 0 and assign_label(0.6501) == 1
    assert assign_label(0.5, 0.4, 0.6) is None


def agg(fid, seen_def, seen_att, total_def, total_att, seen_area, n=100):
    return FrameAggregates(fid, n, seen_def, seen_att, total_def, total_att, seen_area)


def test_vision_features_by_hand():
    span = [agg(0, 2.0, 4.0, 10.0, 8.0, 30.0), agg(1, 6.0, 2.0, 12.0, 4.0, 50.0)]
    f = vision_features(span)
    assert f["feat_A"] == (0.02 + 0.06) / 2
    assert f["feat_B"] == (0.5 + 3.0) / 2
    assert f["feat_C"] == (0.04 + 0.02) / 2
    assert f["feat_D"] == (0.5 + 0.5) / 2
    assert f["feat_E"] == 0.5
    assert f["feat_F"] == (0.3 + 0.5) / 2
    assert f["feat_G"] == (0.2 + 0.5) / 2
    assert f["feat_H"] == 0.5


def test_vision_features_zero_denominators_and_empty():
    f = vision_features([agg(0, 0.0, 0.0, 0.0, 0.0, 0.0)])
    assert all(v == 0.0 for v in f.values())
    with pytest.raises(GazeGridError):
        vision_features([])


def test_vea_counts_window_edges():
    times = [0.0, 1.0, 1.5, 2.0, 3.0]
    c = vea_counts(times, t_now=3.0, t_start=1.0)
    assert c == {"vea_count_1s": 1, "vea_count_2s": 3, "vea_count_since_await_start": 4}


def test_regular_features_and_unknown_label():
    p = PlayerState("a", Team.ATTACKING, (10.0, -5.0), velocity=(1.0, 2.0), speed=math.sqrt(5), position_label="sweeper")
    frame = Frame(0, 0.0, (0.0, 0.0), (p,))
    feats, flags = regular_features(frame, "a", Config())
    assert feats == {
        "dist_to_goal_line": 42.5,
        "dist_to_center_x": 10.0,
        "dist_to_center_y": 5.0,
        "v_x": 1.0,
        "v_y": 2.0,
        "position_label": "unknown",
    }
    assert flags == {"unrecognised_position_label"}


def test_datasets_are_cumulative():
    names = list(DATASETS)
    assert names == ["baseline", "traditional_vea", "regular", "vision"]
    for a, b in zip(names, names[1:]):
        assert DATASETS[b][: len(DATASETS[a])] == DATASETS[a]
    assert DATASETS["vision"] == FEATURE_COLUMNS


def _sample(frame_id, p_rat, value):
    feats = {c: value for c in FEATURE_COLUMNS}
    feats["position_label"] = "wide_back"
    return Sample("m", 0, "e", frame_id, frame_id * 0.04, "a", feats, p_rat, assign_label(p_rat))


def test_dataset_csv_sorted_and_formatted():
    text = dataset_csv([_sample(2, 0.7, 0.1), _sample(1, 0.5, 1.0)])
    lines = text.split("\r\n")
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert lines[1].startswith("m,0,e,1,0.04,a,1.0,")
    assert lines[1].endswith(",0.5,,") and lines[2].endswith(",0.7,1,")


def test_standardization_stats():
    stats = standardization_stats([_sample(1, 0.5, 1.0), _sample(2, 0.5, 3.0)])
    assert stats["m"]["feat_A"] == {"mean": 2.0, "std": 1.0}
    assert "position_label" not in stats["m"]
