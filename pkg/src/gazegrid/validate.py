"""Invariant suite run against real or synthetic data.

Every check returns a :class:`CheckResult`; the report is plain JSON so it
can be diffed and consumed by other tools.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .config import Config
from .core import Frame, Team, normalize_angle
from .engine import SurfaceEngine
from .io import surface_from_bytes, surface_to_bytes
from .occlusion import combined_visibility
from .phases import PhasePair, detect_vea, head_angular_velocity, merge_vea_runs
from .pipeline import find_phases, prepare_frames
from .synthetic import mini_match_events, mini_match_frames
from .vision import field_of_view, speed_scaling

FAST_TOLERANCE = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _sample(frames: Sequence[Frame], max_frames: int) -> list[Frame]:
    if len(frames) <= max_frames:
        return list(frames)
    idx = np.linspace(0, len(frames) - 1, max_frames).round().astype(int)
    return [frames[k] for k in sorted(set(idx))]


def _observers(frame: Frame) -> list:
    return [p for p in frame.players if p.head_angle is not None]


def check_speed_scaling(**_) -> CheckResult:
    got = [tuple(speed_scaling(v)) for v in (0.0, 1.0, 10.0)]
    want = [(0.2, 0.1), (0.5, 0.35), (0.5, 2.6)]
    return CheckResult("speed_scaling_constants", got == want, f"got {got}")


def check_angles(frames, **_) -> CheckResult:
    bad = 0
    for f in frames:
        for p in f.players:
            for a in (p.head_angle, p.shoulder_angle, p.hip_angle):
                if a is not None and not (-math.pi < a <= math.pi and normalize_angle(a) == a):
                    bad += 1
    return CheckResult("angles_normalized", bad == 0, f"{bad} angles outside (-pi, pi]")


def check_vision(frames, engine: SurfaceEngine, reference: SurfaceEngine, **_) -> CheckResult:
    worst_gap, range_bad, above_fov = 0.0, 0, 0
    for f in frames:
        ids = [p.player_id for p in _observers(f)]
        fast = engine.vision_maps(f, ids)
        ref = reference.vision_maps(f, ids) if engine.fast else fast
        for pid in ids:
            v = fast[pid].values
            fov = field_of_view(f.player(pid), engine.grid, engine.vision_params).values
            range_bad += int(v.min() < 0.0 or v.max() > 1.0)
            above_fov += int(np.any(v > fov + FAST_TOLERANCE))
            worst_gap = max(worst_gap, float(np.abs(v - ref[pid].values).max()))
    ok = range_bad == 0 and above_fov == 0 and worst_gap <= FAST_TOLERANCE
    return CheckResult(
        "vision_maps",
        ok,
        f"out_of_range={range_bad} above_fov={above_fov} fast_vs_reference={worst_gap:.3g}",
    )


def check_occlusion_bounds(frames, engine: SurfaceEngine, **_) -> CheckResult:
    bad = 0
    alpha = engine.occ_params.alpha
    for f in frames[:3]:
        for p in _observers(f)[:4]:
            others = [q for q in f.players if q.player_id != p.player_id]
            vis = combined_visibility(p, others, engine.grid, engine.body, engine.occ_params).values
            floor = (1.0 - alpha) ** len(others)
            bad += int(vis.max() > 1.0 or vis.min() < floor - 1e-15)
    return CheckResult("occlusion_bounds", bad == 0, f"{bad} surfaces outside [(1-alpha)^n, 1]")


def check_control(frames, engine: SurfaceEngine, **_) -> CheckResult:
    worst, conserve_bad = 0.0, 0
    for f in frames:
        if not f.team(Team.ATTACKING) or not f.team(Team.DEFENDING):
            continue
        base = engine.control(f)
        worst = max(worst, float(np.abs(base.attacking.values + base.defending.values - 1.0).max()))
        for p in f.team(Team.ATTACKING):
            c = engine.control(f, p.player_id)
            conserve_bad += int(not np.array_equal(c.player_i.values + c.attacking_excl_i.values, c.attacking.values))
    ok = worst <= 1e-12 and conserve_bad == 0
    return CheckResult("control_complement_and_attribution", ok, f"complement_gap={worst:.3g} attribution_failures={conserve_bad}")


def check_value(frames, engine: SurfaceEngine, **_) -> CheckResult:
    bad = 0
    for f in frames:
        vs = engine.value(f)
        bad += int(not np.array_equal(vs.normalized.values, vs.raw.values * vs.eta.values))
        bad += int(vs.eta.values.max() != 1.0)
    return CheckResult("value_product", bad == 0, f"{bad} violations")


def check_surface_roundtrip(frames, engine: SurfaceEngine, **_) -> CheckResult:
    f = frames[0]
    surf = engine.control(f).attacking
    blob = surface_to_bytes(surf)
    back = surface_from_bytes(blob)
    ok = np.array_equal(back.values, surf.values.astype(np.float32)) and surface_to_bytes(back) == blob
    return CheckResult("surface_roundtrip", ok)


def check_phases(frames, pairs: Sequence[PhasePair], kept: Sequence[PhasePair], **_) -> CheckResult:
    ids = [f.frame_id for f in frames]
    by_id = {f.frame_id: f for f in frames}
    problems = []
    for pair in pairs:
        if pair.awaiting.t_end != pair.on_ball.t_start:
            problems.append(f"{pair.pass_event.event_id}: phases not nested")
        if not (ids[0] <= pair.awaiting.t_start and pair.on_ball.t_end <= ids[-1]):
            problems.append(f"{pair.pass_event.event_id}: outside frame range")
        pid = pair.awaiting.player_id
        inside = [i for i in ids if pair.awaiting.t_start < i < pair.awaiting.t_end]
        for i in inside:
            k = ids.index(i)
            d = [
                math.dist(by_id[ids[m]].player(pid).position, by_id[ids[m]].ball)
                if by_id[ids[m]].has_player(pid)
                else None
                for m in (k - 1, k, k + 1)
            ]
            if None not in d and d[0] > d[1] <= d[2]:
                problems.append(f"{pair.pass_event.event_id}: earlier minimum at {i}")
                break
    if not set(id(p) for p in kept) <= set(id(p) for p in pairs):
        problems.append("filter output not a subset")
    return CheckResult("phase_invariants", not problems, "; ".join(problems))


def check_vea_idempotence(frames, pairs, config: Config, **_) -> CheckResult:
    bad = 0
    for pid in sorted({p.awaiting.player_id for p in pairs}):
        events = detect_vea(frames, pid, threshold_deg_s=config.vea_threshold_deg_s)
        ids, vel = head_angular_velocity(frames, pid)
        mask = [abs(v) > config.vea_threshold_deg_s for v in vel]
        bad += int(merge_vea_runs(pid, ids, mask, vel) != events)
    return CheckResult("vea_merge_idempotence", bad == 0, f"{bad} players differ")


def check_determinism(frames, engine: SurfaceEngine, **_) -> CheckResult:
    f = frames[0]
    ids = [p.player_id for p in _observers(f)]
    a = engine.vision_maps(f, ids)
    b = engine.vision_maps(f, ids)
    ok = all(np.array_equal(a[k].values, b[k].values) for k in ids)
    return CheckResult("determinism", ok)


CHECKS: tuple[Callable[..., CheckResult], ...] = (
    check_speed_scaling,
    check_angles,
    check_vision,
    check_occlusion_bounds,
    check_control,
    check_value,
    check_surface_roundtrip,
    check_phases,
    check_vea_idempotence,
    check_determinism,
)


def run_suite(
    frames: Optional[Sequence[Frame]] = None,
    events=None,
    config: Config = Config(),
    max_frames: int = 8,
    store=None,
) -> dict:
    """Run every check; synthetic mini-match data is used when no frames are given."""
    source = "supplied"
    if frames is None:
        frames, events, source = mini_match_frames(), mini_match_events(), "synthetic"
    frames = prepare_frames(frames, config)
    engine = SurfaceEngine(config, store=store)
    reference = SurfaceEngine(config, store=store, engine="reference")
    pairs, kept = [], []
    if events:
        phases = find_phases(events, frames, config)
        pairs, kept = phases.extracted, phases.kept
    context = dict(
        frames=_sample(frames, max_frames),
        engine=engine,
        reference=reference,
        pairs=pairs,
        kept=kept,
        config=config,
    )
    results = []
    for check in CHECKS:
        if check in (check_phases, check_vea_idempotence):
            result = check(**{**context, "frames": frames})
        else:
            try:
                result = check(**context)
            except Exception as exc:  # a crashing check is a failed check
                result = CheckResult(check.__name__.removeprefix("check_"), False, f"error: {exc}")
        results.append(result)
    return {
        "source": source,
        "config_hash": config.hash(),
        "frames_checked": len(context["frames"]),
        "passed": all(r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
