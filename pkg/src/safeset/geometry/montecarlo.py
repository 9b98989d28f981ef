"""Monte-Carlo volume of an arbitrary membership region inside a box.

Samples are drawn uniformly in the box in fixed-size batches, each batch
from its own spawned generator stream. Batch results combine by summation,
so the estimate is bit-identical whether batches run serially or on a
thread pool (size capped by the SAFESET_THREADS environment variable).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import EmptySpace

MIN_SAMPLES = 1000
DEFAULT_BATCH = 8192


def thread_budget() -> int:
    raw = os.environ.get("SAFESET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class McVolume:
    estimate: float
    half_width_95: float
    n_samples: int
    hits: int
    box_volume: float


def mc_volume(
    membership: Callable[[np.ndarray], np.ndarray],
    bounds: np.ndarray,
    n_samples: int = 100_000,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
    threads: int | None = None,
) -> McVolume:
    """Estimate the volume of {x in box : membership(x)}.

    membership maps an (m, n) sample block to an (m,) boolean array. The
    95% half-width is the normal-approximation binomial interval scaled by
    the box volume.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError("bounds must have shape (n, 2)")
    widths = bounds[:, 1] - bounds[:, 0]
    if not (widths > 0).all():
        raise EmptySpace("sampling box must have positive extent in every dimension")
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
    box_volume = float(np.prod(widths))

    counts = [batch_size] * (n_samples // batch_size)
    if n_samples % batch_size:
        counts.append(n_samples % batch_size)
    seeds = np.random.SeedSequence(seed).spawn(len(counts))

    def run_batch(args: tuple[int, np.random.SeedSequence]) -> int:
        m, ss = args
        rng = np.random.default_rng(ss)
        pts = bounds[:, 0] + rng.random((m, bounds.shape[0])) * widths
        return int(np.count_nonzero(membership(pts)))

    workers = thread_budget() if threads is None else max(1, threads)
    if workers == 1:
        hits = sum(run_batch(a) for a in zip(counts, seeds))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run_batch, zip(counts, seeds)))

    p = hits / n_samples
    half = 1.96 * box_volume * float(np.sqrt(p * (1.0 - p) / n_samples))
    return McVolume(
        estimate=box_volume * p,
        half_width_95=half,
        n_samples=n_samples,
        hits=hits,
        box_volume=box_volume,
    )
