"""Convex wrap for point clouds too high-dimensional to triangulate.

The shape is the convex hull of its points, kept implicit: membership asks
whether the query is a convex combination of the points. A non-negative
least-squares fit answers the common case fast, and an exact LP feasibility
check settles everything the fit cannot certify. That costs no exponential
facet enumeration and works in any dimension, at the price of measures
being Monte-Carlo estimates.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog, nnls
from scipy.spatial import cKDTree

from ..errors import DimensionMismatch
from .montecarlo import McVolume, mc_volume

RESIDUAL_TOL = 1e-8

N_CUT_DIRECTIONS = 64
"""Random support directions for the outer-polytope prefilter."""

# The prefilter is a sound necessary condition for any direction set, so a
# hard-coded seed keeps direction choice reproducible everywhere.
_CUT_SEED = 727564


class ConvexHullShape:
    """Implicit convex hull with tolerance-based membership."""

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or len(points) == 0:
            raise ValueError("points must be a non-empty 2-D array")
        self.points = np.unique(points, axis=0)
        self.alpha = math.inf
        self.component_count = 1
        self.measure: float | None = None
        self.measure_half_width: float | None = None
        self._kdtree = cKDTree(self.points)
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        self._bbox = np.stack([lo, hi], axis=1)
        self._scale = max(float((hi - lo).max()), 1.0)
        # stacked system [P^T; 1] lambda = [q; 1] for the combination fit
        self._system = np.vstack(
            [self.points.T, np.full((1, len(self.points)), self._scale)]
        )
        # Outer-polytope prefilter: any member q satisfies, for every
        # direction u, min<P,u> <= <q,u> <= max<P,u>. Violating one cut
        # proves non-membership, so the exact combination fit only runs on
        # the few queries inside all cuts.
        rng = np.random.default_rng(np.random.SeedSequence(_CUT_SEED))
        dirs = rng.standard_normal((N_CUT_DIRECTIONS, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        self._cut_dirs = dirs
        proj = self.points @ dirs.T
        self._cut_lo = proj.min(axis=0)
        self._cut_hi = proj.max(axis=0)
        self._lp_system = np.vstack(
            [self.points.T / self._scale, np.ones((1, len(self.points)))]
        )
        self._lp_cost = np.zeros(len(self.points))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def bbox(self) -> np.ndarray:
        return self._bbox.copy()

    def _tol(self) -> float:
        return 1e-9 * self._scale

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float).ravel()
        if q.shape[0] != self.dim:
            raise DimensionMismatch(
                f"query has dimension {q.shape[0]}, hull lives in {self.dim}"
            )
        return bool(self.contains_batch(q[None, :])[0])

    def contains_batch(self, qs: np.ndarray) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        if qs.ndim != 2 or qs.shape[1] != self.dim:
            raise DimensionMismatch(
                f"queries must have shape (m, {self.dim}), got {qs.shape}"
            )
        tol = self._tol()
        out = np.zeros(len(qs), dtype=bool)
        dist, _ = self._kdtree.query(qs)
        out |= dist <= tol
        in_box = (
            (qs >= self._bbox[:, 0] - tol) & (qs <= self._bbox[:, 1] + tol)
        ).all(axis=1)
        candidates = ~out & in_box
        idx = np.nonzero(candidates)[0]
        if len(idx):
            proj = qs[idx] @ self._cut_dirs.T
            in_cuts = (
                (proj >= self._cut_lo - tol) & (proj <= self._cut_hi + tol)
            ).all(axis=1)
            candidates[idx[~in_cuts]] = False
        pending = np.nonzero(candidates)[0]
        for i in pending:
            out[i] = self._combination_exists(qs[i])
        return out

    def _combination_exists(self, q: np.ndarray) -> bool:
        """Decide whether q is a convex combination of the hull points.

        The NNLS fit runs first, but its reported residual is not trusted:
        the solver can return a suboptimal weight vector with a bogus
        residual, so the residual is recomputed from the weights. A small
        recomputed residual is a genuine membership certificate; a large
        one proves nothing (the fit may simply have been sloppy), so those
        queries get an exact LP feasibility verdict.
        """
        rhs = np.concatenate([q, [self._scale]])
        x, _ = nnls(self._system, rhs)
        resid = float(np.linalg.norm(self._system @ x - rhs))
        if resid <= RESIDUAL_TOL * self._scale * max(1.0, float(np.linalg.norm(rhs))):
            return True
        res = linprog(
            self._lp_cost,
            A_eq=self._lp_system,
            b_eq=np.concatenate([q / self._scale, [1.0]]),
            bounds=(0.0, None),
            method="highs",
        )
        return res.status == 0

    contains_batch_fast = contains_batch

    def estimate_measure(self, seed: int, n_samples: int) -> McVolume:
        """Monte-Carlo volume over the shape's own bounding box.

        A bounding box that is flat in any dimension means the hull has
        zero volume; that is reported exactly without sampling.
        """
        widths = self._bbox[:, 1] - self._bbox[:, 0]
        if not (widths > 0).all():
            result = McVolume(0.0, 0.0, 0, 0, 0.0)
        else:
            result = mc_volume(
                self.contains_batch, self._bbox, n_samples=n_samples, seed=seed
            )
        self.measure = result.estimate
        self.measure_half_width = result.half_width_95
        return result

    def to_dict(self) -> dict:
        return {
            "kind": "convex_hull",
            "dim": self.dim,
            "alpha": None,
            "measure": self.measure,
            "measure_half_width_95": self.measure_half_width,
            "n_points": len(self.points),
            "points": self.points.tolist(),
        }
