"""Log-space bisection for the smallest workable alpha.

An alpha is feasible when the filtered shape is a single connected piece
and every input point is a vertex of at least one included full-dimensional
simplex. Feasibility is monotone in alpha, so bisection on the geometric
mean brackets the threshold; the search stops when the bracket is narrower
than the (linear) threshold and returns the smallest feasible alpha probed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import InfeasibleAtHi
from .simplicial import AlphaShape, SimplicialComplex, alpha_complex, delaunay


def shape_is_feasible(shape: AlphaShape) -> bool:
    """Single component, with every point used by an included top simplex."""
    return shape.component_count == 1 and shape.covers_vertices


@dataclass(frozen=True)
class AlphaSearchResult:
    alpha: float
    shape: AlphaShape
    probes: tuple[tuple[float, bool], ...]


def search_optimal_alpha(
    points_or_complex: np.ndarray | SimplicialComplex,
    lo: float = 0.01,
    hi: float = 100.0,
    threshold: float = 0.1,
    feasible: Callable[[AlphaShape], bool] = shape_is_feasible,
    max_exact_dim: int | None = None,
) -> AlphaSearchResult:
    """Find the smallest alpha (within ``threshold``) whose shape is feasible.

    The upper end is probed first; if even that fails, InfeasibleAtHi is
    raised. Each bisection step probes the geometric mean of the bracket,
    keeping hi on the feasible side, and the best (smallest) feasible probe
    is returned together with its shape. Feasibility monotonicity is
    asserted over the probe history.
    """
    if not (0.0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    if isinstance(points_or_complex, SimplicialComplex):
        c = points_or_complex
    else:
        kwargs = {} if max_exact_dim is None else {"max_exact_dim": max_exact_dim}
        c = delaunay(np.asarray(points_or_complex, dtype=float), **kwargs)

    probes: list[tuple[float, bool]] = []

    def probe(a: float) -> tuple[AlphaShape, bool]:
        shape = alpha_complex(c, a)
        ok = feasible(shape)
        probes.append((a, ok))
        return shape, ok

    shape_hi, ok = probe(hi)
    if not ok:
        raise InfeasibleAtHi(hi)
    best_alpha, best_shape = hi, shape_hi

    cur_lo, cur_hi = lo, hi
    while cur_hi - cur_lo > threshold:
        mid = math.sqrt(cur_lo * cur_hi)
        shape, ok = probe(mid)
        if ok:
            cur_hi = mid
            best_alpha, best_shape = mid, shape
        else:
            cur_lo = mid

    feas = [a for a, ok in probes if ok]
    infeas = [a for a, ok in probes if not ok]
    assert not infeas or not feas or max(infeas) < min(feas), (
        "feasibility was not monotone in alpha"
    )
    return AlphaSearchResult(
        alpha=best_alpha, shape=best_shape, probes=tuple(probes)
    )
