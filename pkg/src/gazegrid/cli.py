"""Command line: ``gazegrid {surfaces,features,phases,validate,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import run_bench
from .config import Config
from .core import Frame, GazeGridError, Surface, SurfaceKind
from .engine import THREADS_ENV, SurfaceEngine, ordered_map, resolve_threads
from .features import write_dataset
from .io import ValueSurfaceStore, heatmap_pgm, heatmap_ppm, read_events, read_tracking, write_surface
from .occlusion import combined_visibility
from .pipeline import find_phases, prepare_frames, run_features
from .validate import run_suite
from .value import ValueSource
from .vision import field_of_view

logger = logging.getLogger("gazegrid")

BASE_KINDS = (
    "vision",
    "fov",
    "occlusion",
    "control_att",
    "control_att_excl",
    "control_def",
    "control_player",
    "value",
    "value_raw",
    "eta",
)
# observed control: what the player sees of each team's imminent control
ALIASES = {
    "control": "control_att",
    "combined": "vision*control_def",
    "seen_def": "vision*control_def",
    "seen_att": "vision*control_att_excl",
}
PLAYER_KINDS = {"vision", "fov", "occlusion", "control_player", "control_att_excl"}
FORMATS = ("surface", "pgm", "ppm")
SUFFIX = {"surface": ".gzs", "pgm": ".pgm", "ppm": ".ppm"}


def parse_frame_selection(text: Optional[str], frames: Sequence[Frame]) -> list[Frame]:
    """``None`` for all, ``a:b`` for an inclusive id range, or a comma list of ids."""
    if not text:
        return list(frames)
    by_id = {f.frame_id: f for f in frames}
    if ":" in text:
        lo, hi = (int(x) for x in text.split(":", 1))
        chosen = [f for f in frames if lo <= f.frame_id <= hi]
        if not chosen:
            raise GazeGridError(f"no frames in range {text}")
        return chosen
    out = []
    for part in text.split(","):
        fid = int(part)
        if fid not in by_id:
            raise GazeGridError(f"unknown frame {fid}")
        out.append(by_id[fid])
    return out


def expand_kind(kind: str) -> list[str]:
    parts = ALIASES.get(kind, kind).split("*")
    for part in parts:
        if part not in BASE_KINDS:
            raise GazeGridError(f"unknown surface kind {part!r}")
    return parts


class SurfaceRequest:
    """Computes named surfaces for one frame, caching shared intermediates."""

    def __init__(self, engine: SurfaceEngine, frame: Frame, player_id: Optional[str]):
        self.engine, self.frame, self.player_id = engine, frame, player_id
        self._cache: dict[str, Surface] = {}

    def _player(self):
        if self.player_id is None:
            raise GazeGridError("this surface kind needs --player")
        return self.frame.player(self.player_id)

    def get(self, kind: str) -> Surface:
        if kind not in self._cache:
            self._cache[kind] = self._compute(kind)
        return self._cache[kind]

    def _compute(self, kind: str) -> Surface:
        e, f = self.engine, self.frame
        if kind == "vision":
            return e.vision_maps(f, [self._player().player_id])[self.player_id]
        if kind == "fov":
            return field_of_view(self._player(), e.grid, e.vision_params)
        if kind == "occlusion":
            return combined_visibility(self._player(), f.players, e.grid, e.body, e.occ_params)
        if kind.startswith("control"):
            perspective = self._player().player_id if kind in PLAYER_KINDS else None
            c = e.control(f, perspective)
            return {
                "control_att": c.attacking,
                "control_att_excl": c.attacking_excl_i,
                "control_def": c.defending,
                "control_player": c.player_i,
            }[kind]
        values = e.value(f)
        return {"value": values.normalized, "value_raw": values.raw, "eta": values.eta}[kind]

    def product(self, kinds: Sequence[str]) -> Surface:
        result = self.get(kinds[0])
        for kind in kinds[1:]:
            result = result * self.get(kind)
        if len(kinds) > 1:
            result = Surface(result.values, SurfaceKind.GENERIC, result.grid)
        return result


def _load_store(config: Config):
    if config.value_source != ValueSource.EXTERNAL.value:
        return None
    if not config.value_surface_path:
        raise GazeGridError("value_source = external needs value_surface_path")
    return ValueSurfaceStore(config.value_surface_path)


def _load_frames(args, config: Config) -> list[Frame]:
    frames = read_tracking(args.tracking, config.frame_rate)
    return prepare_frames(frames, config)


def cmd_surfaces(args, config: Config) -> int:
    frames = _load_frames(args, config)
    selected = parse_frame_selection(args.frames, frames)
    kinds = args.kinds.split(",")
    parts = {k: expand_kind(k) for k in kinds}
    formats = args.format.split(",")
    for fmt in formats:
        if fmt not in FORMATS:
            raise GazeGridError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    needs_player = any(p in PLAYER_KINDS for ps in parts.values() for p in ps)
    if needs_player and not args.player:
        raise GazeGridError("--player is required for the requested kinds")
    for f in selected:
        if args.player and not f.has_player(args.player):
            raise GazeGridError(f"player {args.player!r} not in frame {f.frame_id}")
    engine = SurfaceEngine(config, store=_load_store(config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def render(frame: Frame) -> list[tuple[str, bytes, Optional[Surface]]]:
        req = SurfaceRequest(engine, frame, args.player)
        items = []
        for kind in kinds:
            surface = req.product(parts[kind])
            stem = f"{kind.replace('*', '-x-')}_{args.player or 'all'}_f{frame.frame_id:06d}"
            for fmt in formats:
                if fmt == "surface":
                    items.append((stem + SUFFIX[fmt], b"", surface))
                else:
                    img = heatmap_pgm(surface) if fmt == "pgm" else heatmap_ppm(surface)
                    items.append((stem + SUFFIX[fmt], img, None))
        return items

    written = 0
    # frames render in parallel; files are written here, in input order
    for items in ordered_map(render, selected, resolve_threads(args.threads)):
        for name, blob, surface in items:
            if surface is not None:
                write_surface(out / name, surface)
            else:
                (out / name).write_bytes(blob)
            written += 1
    print(json.dumps({"config_hash": config.hash(), "frames": len(selected), "files": written}))
    return 0


def cmd_phases(args, config: Config) -> int:
    frames = _load_frames(args, config)
    events = read_events(args.events)
    result = find_phases(events, frames, config)
    kept = {id(p) for p in result.kept}
    rows = [
        {
            "pass_event_id": p.pass_event.event_id,
            "player_id": p.awaiting.player_id,
            "await_start": p.awaiting.t_start,
            "reception": p.awaiting.t_end,
            "on_ball_end": p.on_ball.t_end,
            "open_play": id(p) in kept,
        }
        for p in result.extracted
    ]
    report = {
        "config_hash": config.hash(),
        "pairs": rows,
        "extracted": len(result.extracted),
        "kept": len(result.kept),
        "dropped_events": [e.event_id for e in result.dropped_events],
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_features(args, config: Config) -> int:
    frames = _load_frames(args, config)
    events = read_events(args.events)
    engine = SurfaceEngine(config, store=_load_store(config))
    phases, dataset = run_features(
        events, frames, config, args.match_id, engine, resolve_threads(args.threads), prepared=True
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "dataset.csv", out / "manifest.json", dataset, config)
    summary = {"config_hash": config.hash(), "extracted_pairs": len(phases.extracted), **dataset.counts()}
    print(json.dumps(summary))
    return 0


def cmd_validate(args, config: Config) -> int:
    frames = events = None
    if args.tracking:
        frames = read_tracking(args.tracking, config.frame_rate)
        events = read_events(args.events) if args.events else None
    report = run_suite(frames, events, config, store=_load_store(config))
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if report["passed"] else 1


def cmd_bench(args, config: Config) -> int:
    # the parallel run defaults to 8 threads unless told otherwise
    if args.threads is None and not os.environ.get(THREADS_ENV, "").strip():
        threads = 8
    else:
        threads = resolve_threads(args.threads)
    report = run_bench(n_frames=args.n_frames, threads=threads, config=config)
    report["config_hash"] = config.hash()
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazegrid", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tracking_required=True):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--tracking", required=tracking_required, help="tracking JSONL")
        p.add_argument("--threads", type=int, help="worker threads (default: $GAZEGRID_THREADS or 1)")
        p.add_argument("--out", help="output directory or file")

    p = sub.add_parser("surfaces", help="write per-frame surfaces and heatmaps")
    common(p)
    p.add_argument("--frames", help="frame ids: a:b (inclusive) or a,b,c; default all")
    p.add_argument("--player", help="player id for player-specific kinds")
    p.add_argument(
        "--kinds",
        default="vision",
        help="comma list of " + ", ".join(BASE_KINDS + tuple(ALIASES)) + "; join with * for a product",
    )
    p.add_argument("--format", default="surface", help="comma list of " + ", ".join(FORMATS))
    p.set_defaults(func=cmd_surfaces)

    p = sub.add_parser("phases", help="list awaiting/on-ball phase pairs")
    common(p)
    p.add_argument("--events", required=True, help="events CSV")
    p.set_defaults(func=cmd_phases)

    p = sub.add_parser("features", help="write the feature/label dataset")
    common(p)
    p.add_argument("--events", required=True, help="events CSV")
    p.add_argument("--match-id", default="match")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("validate", help="run the invariant suite (synthetic data by default)")
    common(p, tracking_required=False)
    p.add_argument("--events", help="events CSV")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="frames per second of the full stack")
    p.add_argument("--config")
    p.add_argument("--threads", type=int, help="threads for the parallel run (default 8)")
    p.add_argument("--n-frames", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = Config.load(args.config)
        logger.info("resolved config (%s):\n%s", config.hash(), config.dumps())
        if args.command == "features" and not args.out:
            raise GazeGridError("--out is required")
        if args.command == "surfaces" and not args.out:
            raise GazeGridError("--out is required")
        return args.func(args, config)
    except (GazeGridError, OSError) as exc:
        print(f"gazegrid: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
