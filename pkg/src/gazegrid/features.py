"""Per-sample features, pitch-value labels and dataset export.

One sample is one frame of an awaiting phase. Its label compares the
receiver's controlled pitch value at that frame with the value they
control at the end of the on-ball phase that follows.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .config import Config
from .core import Frame, GazeGridError, Surface, _check_same_grid
from .engine import FrameSurfaces, SurfaceEngine, ordered_map, resolve_threads
from .phases import PhasePair, detect_vea
from .value import goal_distance

logger = logging.getLogger(__name__)

POSITION_CATEGORIES = (
    "wide_midfielder",
    "wide_back",
    "center_forward",
    "central_midfielder",
    "center_back",
    "wide_forward",
)
UNKNOWN_POSITION = "unknown"

VISION_FEATURES = tuple(f"feat_{c}" for c in "ABCDEFGH")
FEATURE_SETS = {
    "baseline": ("dist_to_goal_center",),
    "traditional_vea": ("vea_count_1s", "vea_count_2s", "vea_count_since_await_start"),
    "regular": (
        "dist_to_goal_line",
        "dist_to_center_x",
        "dist_to_center_y",
        "v_x",
        "v_y",
        "position_label",
    ),
    "vision": VISION_FEATURES,
}
FEATURE_COLUMNS = tuple(c for cols in FEATURE_SETS.values() for c in cols)
# each ablation dataset adds one feature group to the previous one
DATASETS = {
    name: tuple(c for group in list(FEATURE_SETS)[: k + 1] for c in FEATURE_SETS[group])
    for k, name in enumerate(FEATURE_SETS)
}
ID_COLUMNS = ("match_id", "pair_id", "pass_event_id", "frame_id", "timestamp_s", "player_id")
CSV_COLUMNS = ID_COLUMNS + FEATURE_COLUMNS + ("p_rat", "label", "flags")


# --- ratios and labels ------------------------------------------------------------


def observed_ratio(control: Surface, vision: Surface) -> float:
    """Share of the control mass that falls in seen cells; 0 when there is no control."""
    _check_same_grid(control, vision)
    total = float(np.sum(control.values))
    if total == 0.0:
        return 0.0
    return float(np.sum(control.values * vision.values)) / total


def value_ratio(p_now: float, p_end: float) -> float:
    if p_now < 0 or p_end < 0:
        raise GazeGridError("pitch values must be nonnegative")
    if p_now == 0 and p_end == 0:
        raise GazeGridError("value ratio undefined: both pitch values are zero")
    return p_end / (p_now + p_end)


def assign_label(p_rat: float, low: float = 0.35, high: float = 0.65) -> Optional[int]:
    if p_rat < low:
        return 0
    if p_rat > high:
        return 1
    return None


# --- vision features --------------------------------------------------------------


@dataclass(frozen=True)
class FrameAggregates:
    """The scalar sums one frame contributes to the vision features."""

    frame_id: int
    n_cells: int
    seen_def: float  # sum(PC_def * V)
    seen_att: float  # sum(PC_att_excl_i * V)
    total_def: float
    total_att: float
    seen_area: float  # sum(V)

    @classmethod
    def from_surfaces(cls, s: FrameSurfaces) -> "FrameAggregates":
        v = s.vision.values
        pc_def = s.control.defending.values
        pc_att = s.control.attacking_excl_i.values
        return cls(
            frame_id=s.frame_id,
            n_cells=v.size,
            seen_def=float(np.sum(pc_def * v)),
            seen_att=float(np.sum(pc_att * v)),
            total_def=float(np.sum(pc_def)),
            total_att=float(np.sum(pc_att)),
            seen_area=float(np.sum(v)),
        )

    @property
    def def_to_att(self) -> float:
        return self.seen_def / self.seen_att if self.seen_att != 0.0 else 0.0

    @property
    def ratio_att(self) -> float:
        return self.seen_att / self.total_att if self.total_att != 0.0 else 0.0

    @property
    def ratio_def(self) -> float:
        return self.seen_def / self.total_def if self.total_def != 0.0 else 0.0


def vision_features(span: Sequence[FrameAggregates]) -> dict[str, float]:
    """Features A-H over ``span`` = the awaiting frames from its start up to and including t."""
    if not span:
        raise GazeGridError("empty span")
    now = span[-1]

    def mean(values):
        return float(np.mean(values))

    return {
        "feat_A": mean([a.seen_def / a.n_cells for a in span]),
        "feat_B": mean([a.def_to_att for a in span]),
        "feat_C": mean([a.seen_att / a.n_cells for a in span]),
        "feat_D": mean([a.ratio_att for a in span]),
        "feat_E": now.ratio_att,
        "feat_F": mean([a.seen_area / a.n_cells for a in span]),
        "feat_G": mean([a.ratio_def for a in span]),
        "feat_H": now.ratio_def,
    }


# --- samples ----------------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    match_id: str
    pair_id: int
    pass_event_id: str
    frame_id: int
    timestamp_s: float
    player_id: str
    features: Mapping[str, object]
    p_rat: float
    label: Optional[int]
    flags: frozenset = field(default_factory=frozenset)

    @property
    def sort_key(self):
        return (self.match_id, self.pair_id, self.frame_id)

    def row(self) -> dict:
        out = {
            "match_id": self.match_id,
            "pair_id": self.pair_id,
            "pass_event_id": self.pass_event_id,
            "frame_id": self.frame_id,
            "timestamp_s": self.timestamp_s,
            "player_id": self.player_id,
        }
        out.update(self.features)
        out["p_rat"] = self.p_rat
        out["label"] = "" if self.label is None else self.label
        out["flags"] = ";".join(sorted(self.flags))
        return out


@dataclass
class Dataset:
    samples: list[Sample]
    config_hash: str
    n_pairs: int = 0
    undefined_p_rat: int = 0
    dropped_pairs: int = 0

    @property
    def labeled(self) -> list[Sample]:
        return [s for s in self.samples if s.label is not None]

    def counts(self) -> dict:
        labels = [s.label for s in self.samples]
        return {
            "pairs": self.n_pairs,
            "dropped_pairs": self.dropped_pairs,
            "samples": len(self.samples),
            "labeled": sum(lab is not None for lab in labels),
            "label_0": labels.count(0),
            "label_1": labels.count(1),
            "excluded": labels.count(None),
            "undefined_p_rat": self.undefined_p_rat,
        }


def regular_features(frame: Frame, player_id: str, config: Config) -> tuple[dict, set]:
    p = frame.player(player_id)
    x, y = p.position
    flags = set()
    label = p.position_label or UNKNOWN_POSITION
    if label != UNKNOWN_POSITION and label not in POSITION_CATEGORIES:
        flags.add("unrecognised_position_label")
        label = UNKNOWN_POSITION
    return (
        {
            "dist_to_goal_line": abs(config.goal_x - x),
            "dist_to_center_x": abs(x),
            "dist_to_center_y": abs(y),
            "v_x": p.velocity[0],
            "v_y": p.velocity[1],
            "position_label": label,
        },
        flags,
    )


def vea_counts(vea_times: Sequence[float], t_now: float, t_start: float) -> dict:
    """VEA onsets in ``(t-1s, t]``, ``(t-2s, t]`` and ``[t_await_start, t]``."""
    eps = 1e-9
    return {
        "vea_count_1s": sum(t_now - 1.0 + eps < v <= t_now + eps for v in vea_times),
        "vea_count_2s": sum(t_now - 2.0 + eps < v <= t_now + eps for v in vea_times),
        "vea_count_since_await_start": sum(t_start - eps <= v <= t_now + eps for v in vea_times),
    }


def _frames_between(frames: Sequence[Frame], lo: int, hi: int) -> list[Frame]:
    """Frames with ``lo <= frame_id < hi``."""
    return [f for f in frames if lo <= f.frame_id < hi]


def build_dataset(
    pairs: Sequence[PhasePair],
    frames: Sequence[Frame],
    config: Config = Config(),
    match_id: str = "match",
    engine: Optional[SurfaceEngine] = None,
    threads: Optional[int] = None,
) -> Dataset:
    """One sample per awaiting-phase frame of every pair."""
    engine = engine or SurfaceEngine(config)
    threads = resolve_threads(threads)
    by_id = {f.frame_id: f for f in frames}
    dataset = Dataset(samples=[], config_hash=config.hash(), n_pairs=len(pairs))
    vea_cache: dict[str, list[float]] = {}

    for pair_id, pair in enumerate(pairs):
        pid = pair.awaiting.player_id
        span_frames = _frames_between(frames, pair.awaiting.t_start, pair.awaiting.t_end)
        end_frame = by_id.get(pair.on_ball.t_end)
        if not span_frames or end_frame is None or any(not f.has_player(pid) for f in span_frames + [end_frame]):
            logger.warning("dropping pair %d: receiver %s missing from its frames", pair_id, pid)
            dataset.dropped_pairs += 1
            continue
        if pid not in vea_cache:
            events = detect_vea(frames, pid, threshold_deg_s=config.vea_threshold_deg_s)
            vea_cache[pid] = [by_id[e.frame_id].timestamp_s for e in events]

        surfaces = ordered_map(lambda f: engine.frame_surfaces(f, pid), span_frames, threads)
        p_end = engine.player_value(end_frame, pid)
        aggregates = [FrameAggregates.from_surfaces(s) for s in surfaces]
        t_start = span_frames[0].timestamp_s
        for k, (frame, surf) in enumerate(zip(span_frames, surfaces)):
            p_now = surf.player_value
            try:
                p_rat = value_ratio(p_now, p_end)
            except GazeGridError:
                logger.info("sample %s/%d excluded: undefined value ratio", pid, frame.frame_id)
                dataset.undefined_p_rat += 1
                continue
            player = frame.player(pid)
            features: dict[str, object] = {
                "dist_to_goal_center": goal_distance(player.position, config.value_params)
            }
            features.update(vea_counts(vea_cache[pid], frame.timestamp_s, t_start))
            regular, flags = regular_features(frame, pid, config)
            features.update(regular)
            features.update(vision_features(aggregates[: k + 1]))
            if aggregates[k].seen_att == 0.0 or aggregates[k].total_att == 0.0 or aggregates[k].total_def == 0.0:
                flags.add("zero_denominator")
            dataset.samples.append(
                Sample(
                    match_id=match_id,
                    pair_id=pair_id,
                    pass_event_id=pair.pass_event.event_id,
                    frame_id=frame.frame_id,
                    timestamp_s=frame.timestamp_s,
                    player_id=pid,
                    features=features,
                    p_rat=p_rat,
                    label=assign_label(p_rat, config.label_low, config.label_high),
                    flags=frozenset(flags | (player.flags & {"interpolated_head_angle", "no_velocity"})),
                )
            )
    dataset.samples.sort(key=lambda s: s.sort_key)
    return dataset


# --- export -----------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dataset_csv(samples: Iterable[Sample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for s in sorted(samples, key=lambda s: s.sort_key):
        row = s.row()
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def standardization_stats(samples: Sequence[Sample]) -> dict:
    """Per-match mean and population std of every numeric feature."""
    numeric = [c for c in FEATURE_COLUMNS if c != "position_label"]
    stats: dict[str, dict] = {}
    for match_id in sorted({s.match_id for s in samples}):
        rows = [s for s in samples if s.match_id == match_id]
        stats[match_id] = {
            c: {
                "mean": float(np.mean([float(s.features[c]) for s in rows])),
                "std": float(np.std([float(s.features[c]) for s in rows])),
            }
            for c in numeric
        }
    return stats


def manifest(dataset: Dataset, config: Config) -> dict:
    labeled = dataset.labeled
    return {
        "config_hash": dataset.config_hash,
        "config": {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in config.resolved().items()},
        "columns": list(CSV_COLUMNS),
        "datasets": {k: list(v) for k, v in DATASETS.items()},
        "counts": dataset.counts(),
        "class_balance": {
            "label_0": sum(s.label == 0 for s in labeled),
            "label_1": sum(s.label == 1 for s in labeled),
        },
        "standardization": standardization_stats(dataset.samples),
    }


def write_dataset(csv_path, manifest_path, dataset: Dataset, config: Config) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_csv(dataset.samples))
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest(dataset, config), fh, indent=2, sort_keys=True)
        fh.write("\n")
