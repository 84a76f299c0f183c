"""Throughput of the full per-frame stack: 22 vision maps with occlusion plus team control."""

from __future__ import annotations

import os
import time
from typing import Optional

from .config import Config
from .engine import SurfaceEngine, ordered_map
from .synthetic import random_frames


def available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def frames_per_second(engine: SurfaceEngine, frames, threads: int, repeats: int = 3) -> float:
    """Best of ``repeats`` timed passes over ``frames``."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        ordered_map(engine.full_stack, frames, threads)
        best = min(best, time.perf_counter() - start)
    return len(frames) / best


def run_bench(
    n_frames: int = 64,
    threads: int = 8,
    config: Config = Config(),
    seed: int = 0,
    repeats: int = 3,
    engine_name: Optional[str] = None,
) -> dict:
    engine = SurfaceEngine(config, engine=engine_name)
    frames = random_frames(n_frames, seed)
    engine.full_stack(frames[0])  # compile / warm caches outside the timed region
    single = frames_per_second(engine, frames, 1, repeats)
    multi = frames_per_second(engine, frames, threads, repeats)
    return {
        "engine": engine.engine,
        "frames": n_frames,
        "players_per_frame": len(frames[0].players),
        "grid": list(engine.grid.shape[::-1]),
        "cpu_count": available_cpus(),
        "threads": threads,
        "single_thread_fps": single,
        "multi_thread_fps": multi,
        "speedup": multi / single,
    }
