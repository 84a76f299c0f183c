"""One test per acceptance criterion; each records a single PASS/FAIL line."""

import math

import numpy as np

import oracles
from conftest import ACCEPTANCE_LINES
from gazegrid.bench import available_cpus, run_bench
from gazegrid.config import Config
from gazegrid.control import ControlParams, default_influence_at_points, influence_at_points, logistic, pitch_control
from gazegrid.core import DEFAULT_GRID, Frame, PitchGrid, PlayerState, Team
from gazegrid.engine import SurfaceEngine
from gazegrid.features import (
    FrameAggregates,
    assign_label,
    dataset_csv,
    value_ratio,
    vision_features,
)
from gazegrid.occlusion import OcclusionParams, apparent_width, combined_visibility, pair_occlusion, vision_map
from gazegrid.phases import detect_vea, head_angular_velocity, merge_vea_runs
from gazegrid.pipeline import run_features
from gazegrid.synthetic import mini_match_events, mini_match_frames, random_frames
from gazegrid.value import eta_surface, instantaneous_player_value, normalized_value
from gazegrid.vision import (
    angular_decay,
    binary_fov,
    field_of_view,
    fov_at_points,
    radial_decay,
    speed_scaling,
    view_geometry,
)

N_CONFIGS = 1000


def verdict(number: int, title: str, failures: list[str]) -> None:
    ok = not failures
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title}"
    if failures:
        line += " | " + "; ".join(failures[:5])
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def observer(x, y, head=0.0, speed=0.0, pid="obs", team=Team.ATTACKING, shoulder=None):
    return PlayerState(pid, team, (x, y), speed=speed, head_angle=head, shoulder_angle=shoulder)


# --- 1 --------------------------------------------------------------------------


def test_criterion_01_speed_scaling_constants():
    want = {0.0: (0.2, 0.1), 1.0: (0.5, 0.35), 10.0: (0.5, 2.6)}
    failures = [f"v={v}: {tuple(speed_scaling(v))} != {w}" for v, w in want.items() if tuple(speed_scaling(v)) != w]
    verdict(1, "speed scaling exact at v = 0, 1, 10", failures)


# --- 2 --------------------------------------------------------------------------


def test_criterion_02_field_of_view_properties():
    rng = np.random.default_rng(2)
    big = PitchGrid(10_000, 10_000)  # pitch clipping out of the way for rotated points
    X, Y = DEFAULT_GRID.mesh
    failures = []
    for k in range(N_CONFIGS):
        r, bearing = 30.0 * math.sqrt(rng.uniform()), rng.uniform(-math.pi, math.pi)
        px, py = r * math.cos(bearing), r * math.sin(bearing)  # stays on the pitch under rotation
        head, speed = rng.uniform(-math.pi, math.pi), rng.uniform(0, 10)
        p = observer(px, py, head, speed)
        col, row = int(rng.integers(0, 105)), int(rng.integers(0, 68))
        fov = field_of_view(p)
        v = fov.at(col, row)
        cx, cy = oracles.cell_center(col, row)
        own = DEFAULT_GRID.cell_of(px, py) == (col, row)

        if not 0.0 <= fov.values.min() <= fov.values.max() <= 1.0:
            failures.append(f"config {k}: range")
        # zero outside the wedge
        theta = oracles.wrapped_abs(math.atan2(cy - py, cx - px) - head)
        if not own and theta > math.pi / 3 + 1e-12 and v != 0.0:
            failures.append(f"config {k}: nonzero outside wedge")
        # focal maximum: 1 at the player, and nothing beats the on-axis point at the same range
        if fov.at(*DEFAULT_GRID.cell_of(px, py)) != 1.0:
            failures.append(f"config {k}: own cell != 1")
        d = math.hypot(cx - px, cy - py)
        on_axis = oracles.fov_value(px, py, head, speed, px + d * math.cos(head), py + d * math.sin(head), sigma_r=30.0)
        if not own and v > on_axis * (1 + 1e-12):
            failures.append(f"config {k}: exceeds on-axis value")
        # speed monotonicity
        faster = field_of_view(observer(px, py, head, speed + rng.uniform(0, 5)))
        if np.any(faster.values > fov.values):
            failures.append(f"config {k}: faster player sees more")
        # rotation equivariance about the origin
        phi = rng.uniform(-math.pi, math.pi)
        c, s = math.cos(phi), math.sin(phi)
        q = observer(c * px - s * py, s * px + c * py, head + phi, speed)
        a = fov_at_points(p, np.array([cx]), np.array([cy]), grid=big)[0]
        b = fov_at_points(q, np.array([c * cx - s * cy]), np.array([s * cx + c * cy]), grid=big)[0]
        if abs(theta - math.pi / 3) > 1e-9 and abs(a - b) > 1e-9:
            failures.append(f"config {k}: rotation gap {abs(a - b):.2e}")
        # exact factorisation R * A * binary wedge
        scaling = speed_scaling(speed)
        dd, off = view_geometry(p, X, Y)
        cell = DEFAULT_GRID.cell_of(px, py)
        dd[cell[1], cell[0]] = 0.0
        off[cell[1], cell[0]] = 0.0
        product = radial_decay(dd, scaling) * angular_decay(off, scaling) * binary_fov(p).values
        if not np.array_equal(fov.values, product):
            failures.append(f"config {k}: factorisation not exact")
        # independent scalar oracle
        if not own and abs(theta - math.pi / 3) > 1e-9 and not math.isclose(v, oracles.fov_value(px, py, head, speed, cx, cy), rel_tol=1e-12, abs_tol=1e-15):
            failures.append(f"config {k}: oracle mismatch")
    verdict(2, f"field-of-view properties on {N_CONFIGS} configurations", failures)


# --- 3 --------------------------------------------------------------------------


def test_criterion_03_apparent_width():
    rng = np.random.default_rng(3)
    failures = []
    worst = 0.0
    for k in range(N_CONFIGS):
        delta = rng.uniform(1.0, 50.0)
        bearing = rng.uniform(-math.pi, math.pi)
        p_i = tuple(rng.uniform(-20, 20, 2))
        p_j = (p_i[0] + delta * math.cos(bearing), p_i[1] + delta * math.sin(bearing))
        theta_s = rng.uniform(-math.pi, math.pi)
        got = apparent_width(p_i, p_j, theta_s)
        want = oracles.sampled_width(p_i, p_j, theta_s, n_rays=100_000)
        worst = max(worst, abs(got - want))
        if abs(got - want) > 1e-4:
            failures.append(f"config {k}: |{got:.6f} - {want:.6f}| > 1e-4")
        # face-on (shoulder line perpendicular to the line of sight) beats side-on
        if delta >= 2.0:
            face = apparent_width(p_i, p_j, bearing + math.pi / 2)
            side = apparent_width(p_i, p_j, bearing)
            if not face > side:
                failures.append(f"config {k}: face-on {face} <= side-on {side}")
        # half-turn invariance on an exactly representable pair (phi, phi - pi), phi >= pi/2
        phi = theta_s - math.pi if theta_s >= math.pi / 2 else theta_s + math.pi
        if phi < math.pi / 2:
            phi += 2 * math.pi
        if apparent_width(p_i, p_j, phi) != apparent_width(p_i, p_j, phi - math.pi):
            failures.append(f"config {k}: half-turn not exact")
    verdict(3, f"apparent width vs 1e5-ray oracle (worst {worst:.1e} rad), face-on > side-on, half-turn exact", failures)


# --- 4 --------------------------------------------------------------------------


def test_criterion_04_occlusion_properties():
    rng = np.random.default_rng(4)
    failures = []
    alpha = OcclusionParams().alpha
    X, Y = DEFAULT_GRID.mesh
    obs = observer(0.0, 0.0)
    if not np.array_equal(combined_visibility(obs, []).values, np.ones(DEFAULT_GRID.shape)):
        failures.append("empty product is not all ones")
    for k in range(100):
        o = observer(rng.uniform(-40, 40), rng.uniform(-30, 30), head=rng.uniform(-math.pi, math.pi))
        others = []
        while len(others) < 6:
            pos = (rng.uniform(-45, 45), rng.uniform(-30, 30))
            if math.dist(pos, o.position) > 1.0:
                others.append(observer(*pos, pid=f"j{len(others)}", team=Team.DEFENDING, shoulder=rng.uniform(-math.pi, math.pi)))
        prev = combined_visibility(o, []).values
        for m in range(1, len(others) + 1):
            cur = combined_visibility(o, others[:m]).values
            if np.any(cur > prev):
                failures.append(f"config {k}: adding occluder {m} raised visibility")
            # cells not beyond the new occluder are untouched, exactly
            j = others[m - 1]
            ux, uy = np.subtract(j.position, o.position) / math.dist(j.position, o.position)
            proj = (X - o.position[0]) * ux + (Y - o.position[1]) * uy
            between = proj <= math.dist(j.position, o.position)
            q = pair_occlusion(o, j).values
            if np.any(q[between] != 0.0) or not np.array_equal(cur[between], prev[between]):
                failures.append(f"config {k}: occluder {m} touches cells in front of it")
            if q.max() > alpha:
                failures.append(f"config {k}: pair occlusion {q.max()} > alpha")
            prev = cur
        # two occluders at the same spot compose as (1 - q)^2
        j = others[0]
        twin = j.replace(player_id="j_twin")
        q = pair_occlusion(o, j).values
        both = combined_visibility(o, [j, twin]).values
        gap = np.abs(both - (1.0 - q) ** 2).max()
        if gap > 1e-9:
            failures.append(f"config {k}: coincident composition gap {gap:.1e}")
    verdict(4, "occlusion identity, monotone shadowing, neutrality, <= alpha, (1-q)^2", failures)


# --- 5 --------------------------------------------------------------------------


def _mirror(frame: Frame) -> Frame:
    swap = {Team.ATTACKING: Team.DEFENDING, Team.DEFENDING: Team.ATTACKING}
    players = tuple(
        p.replace(team=swap[p.team], position=(-p.position[0], p.position[1]), velocity=(-p.velocity[0], p.velocity[1]))
        for p in frame.players
    )
    return frame.replace(ball=(-frame.ball[0], frame.ball[1]), players=players)


def test_criterion_05_pitch_control():
    failures = []
    X, Y = DEFAULT_GRID.mesh
    unscaled = ControlParams(c_in=0.5)
    identity = ControlParams(c_in=1.0)
    engines = (SurfaceEngine(Config()), SurfaceEngine(Config(), engine="reference"))
    for k, frame in enumerate(random_frames(20, seed=5)):
        for eng in engines:
            c = eng.control(frame)
            gap = np.abs(c.attacking.values + c.defending.values - 1.0).max()
            if gap > 1e-12:
                failures.append(f"frame {k} {eng.engine}: complement gap {gap:.1e}")
            total = np.zeros(DEFAULT_GRID.shape)
            for p in frame.team(Team.ATTACKING):
                cp = eng.control(frame, p.player_id)
                if not np.array_equal(cp.player_i.values + cp.attacking_excl_i.values, cp.attacking.values):
                    failures.append(f"frame {k} {eng.engine}: attribution of {p.player_id} not exact")
                total = total + cp.player_i.values
            if np.abs(total - c.attacking.values).max() > 1e-12:
                failures.append(f"frame {k} {eng.engine}: attacker shares do not add up")
        # c_in = 1 reproduces the unscaled model bit for bit
        for p in frame.players:
            if not np.array_equal(influence_at_points(p, frame.ball, X, Y, identity), default_influence_at_points(p, frame.ball, X, Y, unscaled)):
                failures.append(f"frame {k}: c_in=1 influence differs for {p.player_id}")
        att = sum((default_influence_at_points(p, frame.ball, X, Y) for p in frame.team(Team.ATTACKING)), np.zeros(X.shape))
        dfn = sum((default_influence_at_points(p, frame.ball, X, Y) for p in frame.team(Team.DEFENDING)), np.zeros(X.shape))
        if not np.array_equal(pitch_control(frame, params=identity).attacking.values, logistic(att - dfn)):
            failures.append(f"frame {k}: c_in=1 control differs from unscaled model")
        # mirror: reflect x and swap teams
        mirrored = pitch_control(_mirror(frame)).attacking.values[:, ::-1]
        gap = np.abs(mirrored - pitch_control(frame).defending.values).max()
        if gap > 1e-9:
            failures.append(f"frame {k}: mirror gap {gap:.1e}")
    verdict(5, "control complement, c_in=1 identity, mirror symmetry, exact attribution", failures)


# --- 6 --------------------------------------------------------------------------


def test_criterion_06_value_and_labels():
    failures = []
    for k, frame in enumerate(random_frames(10, seed=6)):
        vs = normalized_value(frame)
        if not np.array_equal(vs.normalized.values, vs.raw.values * vs.eta.values):
            failures.append(f"frame {k}: normalized != raw * eta")
        # a lone attacker owns all attacking control, so its value is sum(PC_att * value)
        lone = frame.replace(players=tuple(p for p in frame.players if p.team == Team.DEFENDING or p.player_id == "A01"))
        want = oracles.grid_sum(pitch_control(lone).attacking.values, normalized_value(lone).normalized.values)
        got = instantaneous_player_value(lone, "A01")
        if not math.isclose(got, want, rel_tol=1e-12):
            failures.append(f"frame {k}: lone-attacker value {got} != {want}")
    # eta strictly decreasing in distance; squared distances of half-integer centres are exact
    eta = eta_surface().values.ravel()
    X, Y = DEFAULT_GRID.mesh
    d2 = ((X - 52.5) ** 2 + Y**2).ravel()
    order = np.argsort(d2, kind="stable")
    d2s, etas = d2[order], eta[order]
    same = d2s[1:] == d2s[:-1]
    if np.any(etas[1:][same] != etas[:-1][same]) or np.any(etas[1:][~same] >= etas[:-1][~same]):
        failures.append("eta not strictly decreasing in distance")
    cases = {(7.0, 3.0): (0.30, 0), (5.0, 5.0): (0.50, None), (3.0, 7.0): (0.70, 1), (0.123, 0.123): (0.5, None)}
    for (p_now, p_end), (p_rat, label) in cases.items():
        r = value_ratio(p_now, p_end)
        if r != p_rat or assign_label(r) != label:
            failures.append(f"value_ratio({p_now}, {p_end}) = {r} -> {assign_label(r)}")
    verdict(6, "value product exact, eta strictly monotone, label cases exact", failures)


# --- 7 --------------------------------------------------------------------------


def _trace(degrees, fps=25.0):
    return [
        Frame(k, k / fps, (5.0, 0.0), (observer(0.0, 0.0, head=math.radians(a), pid="r"),))
        for k, a in enumerate(degrees)
    ]


def test_criterion_07_vea_detection():
    failures = []
    fast = _trace([6.0 * k for k in range(25)])
    events = detect_vea(fast, "r")
    if len(events) != 1 or events[0].frame_id != 1:
        failures.append(f"6 deg/frame: {events}")
    if detect_vea(_trace([4.0 * k for k in range(25)]), "r"):
        failures.append("4 deg/frame detected")
    if detect_vea(_trace([359.0, 1.0, 3.0]), "r"):
        failures.append("359 -> 1 deg detected")
    # merging is idempotent: re-merging the merged events' flags gives the same events
    bursts = _trace([0, 0, 6, 12, 18, 18, 18, 30, 42, 42] + [42] * 5)
    ids, vel = head_angular_velocity(bursts, "r")
    mask = [abs(v) > 125.0 for v in vel]
    once = merge_vea_runs("r", ids, mask, vel)
    again_mask = [any(e.frame_id <= i <= e.end_frame_id for e in once) for i in ids]
    twice = merge_vea_runs("r", ids, again_mask, vel)
    if once != twice or once != detect_vea(bursts, "r") or len(once) != 2:
        failures.append(f"merge not idempotent: {once} vs {twice}")
    verdict(7, "VEA 6 deg/frame detected, 4 deg/frame and wraparound not, merge idempotent", failures)


# --- 8 --------------------------------------------------------------------------


EXPECTED_COUNTS = {
    "pairs": 2,
    "dropped_pairs": 0,
    "samples": 55,
    "labeled": 47,
    "label_0": 40,
    "label_1": 7,
    "excluded": 8,
    "undefined_p_rat": 0,
}
EXPECTED_PER_PAIR = {0: {"e3": (15, 8, 7)}, 1: {"e4": (25, 0, 0)}}  # (label 0, excluded, label 1)


def _brute_force_aggregate(frame, pid):
    """Per-frame sums from the reference surfaces using explicit cell loops."""
    players = list(frame.players)
    v = vision_map(frame.player(pid), players).values
    ctrl = pitch_control(frame, perspective=pid)
    pc_def, pc_att = ctrl.defending.values, ctrl.attacking_excl_i.values
    value = normalized_value(frame).normalized.values
    return {
        "seen_def": oracles.grid_sum(pc_def, v),
        "seen_att": oracles.grid_sum(pc_att, v),
        "total_def": oracles.grid_sum(pc_def),
        "total_att": oracles.grid_sum(pc_att),
        "seen_area": oracles.grid_sum(v),
        "p_value": oracles.grid_sum(ctrl.player_i.values, value),
    }


def test_criterion_08_end_to_end_fixture(mini_match):
    frames, events = mini_match
    failures = []
    phases, dataset = run_features(events, frames, Config(), "mini", prepared=True)
    if (len(phases.extracted), len(phases.kept)) != (3, 2):
        failures.append(f"pairs extracted/kept {len(phases.extracted)}/{len(phases.kept)} != 3/2")
    if dataset.counts() != EXPECTED_COUNTS:
        failures.append(f"counts {dataset.counts()}")
    for pair_id, expected in EXPECTED_PER_PAIR.items():
        rows = [s for s in dataset.samples if s.pair_id == pair_id]
        (event_id, split), = expected.items()
        got = tuple(sum(s.label == lab for s in rows) for lab in (0, None, 1))
        if rows[0].pass_event_id != event_id or got != split:
            failures.append(f"pair {pair_id}: {rows[0].pass_event_id} {got} != {event_id} {split}")

    by_id = {f.frame_id: f for f in frames}
    n = DEFAULT_GRID.n_cells
    worst = 0.0
    for pair_id, pair in enumerate(phases.kept):
        pid = pair.awaiting.player_id
        end = _brute_force_aggregate(by_id[pair.on_ball.t_end], pid)["p_value"]
        span = []
        samples = {s.frame_id: s for s in dataset.samples if s.pair_id == pair_id}
        for fid in range(pair.awaiting.t_start, pair.awaiting.t_end):
            a = _brute_force_aggregate(by_id[fid], pid)
            span.append(a)
            mean = lambda xs: sum(xs) / len(xs)  # noqa: E731
            ratio = lambda x, y: x / y if y != 0 else 0.0  # noqa: E731
            want = {
                "feat_A": mean([s["seen_def"] / n for s in span]),
                "feat_B": mean([ratio(s["seen_def"], s["seen_att"]) for s in span]),
                "feat_C": mean([s["seen_att"] / n for s in span]),
                "feat_D": mean([ratio(s["seen_att"], s["total_att"]) for s in span]),
                "feat_E": ratio(a["seen_att"], a["total_att"]),
                "feat_F": mean([s["seen_area"] / n for s in span]),
                "feat_G": mean([ratio(s["seen_def"], s["total_def"]) for s in span]),
                "feat_H": ratio(a["seen_def"], a["total_def"]),
                "p_rat": end / (a["p_value"] + end),
            }
            sample = samples[fid]
            player = by_id[fid].player(pid)
            want["dist_to_goal_center"] = math.hypot(player.position[0] - 52.5, player.position[1])
            want["dist_to_goal_line"] = abs(52.5 - player.position[0])
            for name, value in want.items():
                got = sample.p_rat if name == "p_rat" else sample.features[name]
                gap = abs(got - value)
                worst = max(worst, gap)
                if gap > 1e-9:
                    failures.append(f"pair {pair_id} frame {fid} {name}: gap {gap:.1e}")
    # re-running from scratch, with threads, gives byte-identical CSV
    first = dataset_csv(dataset.samples)
    _, again = run_features(mini_match_events(), mini_match_frames(), Config(), "mini", threads=3)
    if dataset_csv(again.samples).encode() != first.encode():
        failures.append("CSV differs between runs")
    verdict(8, f"mini-match 3/2 pairs, 55 samples, 40/7 labeled, 8 excluded, features within 1e-9 (worst {worst:.1e}), CSV reproducible", failures)


# --- 9 --------------------------------------------------------------------------


def _scene(head: float) -> list[Frame]:
    """Receiver at the centre spot; teammates behind, defenders ahead (attack toward +x)."""
    base = [
        observer(0.0, 0.0, head=head, pid="R"),
        observer(-15.0, 10.0, pid="A2"),
        observer(-20.0, -12.0, pid="A3"),
        observer(-35.0, 0.0, pid="A4"),
        observer(8.0, 15.0, pid="A5"),
        observer(12.0, -3.0, pid="D1", team=Team.DEFENDING),
        observer(18.0, 12.0, pid="D2", team=Team.DEFENDING),
        observer(25.0, -15.0, pid="D3", team=Team.DEFENDING),
        observer(35.0, 4.0, pid="D4", team=Team.DEFENDING),
        observer(45.0, 0.0, pid="D5", team=Team.DEFENDING),
    ]
    return [Frame(k, k * 0.04, (-10.0, 5.0), tuple(base)) for k in range(5)]


def test_criterion_09_directional_sanity():
    engine = SurfaceEngine(Config())
    feats = {}
    for name, head in (("facer", 0.0), ("away", math.pi)):
        span = [FrameAggregates.from_surfaces(engine.frame_surfaces(f, "R")) for f in _scene(head)]
        feats[name] = vision_features(span)
    failures = [
        f"{c}: facer {feats['facer'][c]:.4g} <= away {feats['away'][c]:.4g}"
        for c in ("feat_A", "feat_B", "feat_G", "feat_H")
        if not feats["facer"][c] > feats["away"][c]
    ]
    verdict(9, "receiver facing the defended half scores higher on A, B, G, H", failures)


# --- 10 -------------------------------------------------------------------------


def test_criterion_10_throughput():
    report = run_bench(n_frames=64, threads=8, repeats=3)
    failures = []
    single, speedup = report["single_thread_fps"], report["speedup"]
    if single < 100.0:
        failures.append(f"single thread {single:.1f} fps < 100")
    if speedup < 3.0:
        failures.append(f"speedup {speedup:.2f}x < 3x at 8 threads ({available_cpus()} CPU available)")
    verdict(
        10,
        f"throughput single={single:.1f} fps (>= 100), 8 threads={report['multi_thread_fps']:.1f} fps, speedup={speedup:.2f}x (>= 3)",
        failures,
    )
