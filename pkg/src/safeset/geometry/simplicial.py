"""Triangulated point clouds and their alpha-filtered subcomplexes.

``delaunay`` triangulates a full-dimensional point cloud, enumerates every
face of every dimension, and stamps each simplex with its filtration value:
the minimum-enclosing-ball radius of its vertex set. Keeping the simplices
whose filtration is at most alpha yields the alpha-filtered shape: tiny
alpha leaves isolated vertices, huge alpha the full convex hull.

Inclusion is face-closed because the enclosing-ball radius of a subset of
vertices never exceeds that of the superset (a residual floating-point
clamp enforces that bitwise). Two consequences used throughout:

* connectivity of the filtered complex equals connectivity of its edge
  skeleton, since every included simplex links its vertices via included
  edges, so component counting runs on (all vertices, included edges);
* a point belongs to the filtered shape iff its carrier, the unique
  minimal simplex of the triangulation containing it, is included, since
  any larger included simplex would force the carrier in as a face.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree

from ..errors import DegenerateInput, DimensionMismatch, DimensionTooHigh
from .minball import meb_radii

DEFAULT_MAX_EXACT_DIM = 6
REL_TOL = 1e-9


def _dedupe_rows(points: np.ndarray) -> np.ndarray:
    """Stable keep-first removal of exactly repeated rows."""
    _, first = np.unique(points, axis=0, return_index=True)
    return points[np.sort(first)]


@dataclass(eq=False)
class SimplicialComplex:
    """Full Delaunay complex with per-simplex filtration values.

    simplices[k] is an (m_k, k+1) array of sorted vertex indices;
    filtration[k] the matching radii; faces_of[k] maps each k-simplex to
    the ids of its (k-1)-faces. Top-simplex volumes are precomputed.
    """

    points: np.ndarray
    simplices: dict[int, np.ndarray]
    filtration: dict[int, np.ndarray]
    faces_of: dict[int, np.ndarray]
    top_volumes: np.ndarray
    tri: Delaunay = field(repr=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def scale(self) -> float:
        extent = self.points.max(axis=0) - self.points.min(axis=0)
        return float(extent.max())

    _kdtree: cKDTree | None = field(default=None, repr=False)

    def kdtree(self) -> cKDTree:
        if self._kdtree is None:
            self._kdtree = cKDTree(self.points)
        return self._kdtree

    _face_lookup: dict[int, dict[tuple[int, ...], int]] | None = field(
        default=None, repr=False
    )

    def face_id(self, vertex_ids: tuple[int, ...]) -> int | None:
        """Id of the simplex with exactly these (sorted) vertices, if any."""
        if self._face_lookup is None:
            self._face_lookup = {}
        k = len(vertex_ids) - 1
        if k not in self._face_lookup:
            self._face_lookup[k] = {
                tuple(row): i for i, row in enumerate(self.simplices[k])
            }
        return self._face_lookup[k].get(tuple(sorted(vertex_ids)))


def delaunay(
    points: np.ndarray, max_exact_dim: int = DEFAULT_MAX_EXACT_DIM
) -> SimplicialComplex:
    """Triangulate and filter a point cloud.

    Requires at least n+1 affinely independent points in dimension
    n <= max_exact_dim; duplicated rows are dropped first. Points the
    triangulator would skip as coplanar trigger a joggled retry so every
    input point ends up as a vertex.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise DegenerateInput("points must be a 2-D array")
    points = _dedupe_rows(points)
    n_pts, dim = points.shape
    if dim > max_exact_dim:
        raise DimensionTooHigh(dim, max_exact_dim)
    if n_pts < dim + 1:
        raise DegenerateInput(
            f"need at least {dim + 1} distinct points in dimension {dim}, got {n_pts}"
        )
    centered = points - points[0]
    if np.linalg.matrix_rank(centered) < dim:
        raise DegenerateInput("points are affinely dependent (not full-dimensional)")

    # Exact degeneracies (many points on one hull facet, cospherical sets)
    # make unjoggled qhull spend minutes merging facets, while a joggled
    # run picks one valid triangulation in seconds. Joggling perturbs only
    # qhull's internal copy: simplices index back into the exact input
    # coordinates, so filtration values and volumes are unaffected by it.
    # Small inputs try the unjoggled triangulation first so hand-sized
    # fixtures keep their canonical combinatorics.
    tri = None
    if n_pts <= 512:
        try:
            tri = Delaunay(points)
            if len(tri.coplanar):
                tri = None
        except QhullError:
            tri = None
    if tri is None:
        try:
            tri = Delaunay(points, qhull_options="QJ")
        except QhullError as exc:
            raise DegenerateInput(f"triangulation failed: {exc}") from exc
    if len(tri.coplanar):
        raise DegenerateInput("triangulation skipped input points even after joggling")

    tops = np.sort(tri.simplices, axis=1).astype(np.int64)
    edge_vecs = points[tops[:, 1:]] - points[tops[:, :1]]
    top_volumes = np.abs(np.linalg.det(edge_vecs)) / factorial(dim)

    simplices: dict[int, np.ndarray] = {dim: tops}
    faces_of: dict[int, np.ndarray] = {}
    for k in range(dim, 0, -1):
        cur = simplices[k]
        m = cur.shape[0]
        drop = np.arange(k + 1)
        stacked = np.stack(
            [np.delete(cur, i, axis=1) for i in drop], axis=1
        ).reshape(m * (k + 1), k)
        if k == 1:
            face_ids = stacked[:, 0]
            simplices[0] = np.arange(points.shape[0], dtype=np.int64)[:, None]
        else:
            uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
            simplices[k - 1] = uniq
            face_ids = inverse
        faces_of[k] = face_ids.reshape(m, k + 1)

    filtration: dict[int, np.ndarray] = {0: np.zeros(points.shape[0])}
    for k in range(1, dim + 1):
        filtration[k] = meb_radii(points[simplices[k]])
    # clamp any floating-point leak so faces never outrank their cofacets
    for k in range(dim, 1, -1):
        np.minimum.at(
            filtration[k - 1],
            faces_of[k].ravel(),
            np.repeat(filtration[k], k + 1),
        )

    return SimplicialComplex(
        points=points,
        simplices=simplices,
        filtration=filtration,
        faces_of=faces_of,
        top_volumes=top_volumes,
        tri=tri,
    )


@dataclass(eq=False)
class AlphaShape:
    """The subcomplex of simplices with filtration value at most alpha."""

    complex: SimplicialComplex
    alpha: float
    included: dict[int, np.ndarray]
    measure: float
    component_count: int
    covers_vertices: bool

    @property
    def dim(self) -> int:
        return self.complex.dim

    @property
    def points(self) -> np.ndarray:
        return self.complex.points

    def bbox(self) -> np.ndarray:
        pts = self.complex.points
        return np.stack([pts.min(axis=0), pts.max(axis=0)], axis=1)

    def _tol(self) -> float:
        return REL_TOL * max(self.complex.scale(), 1.0)

    def _carrier_included(self, q: np.ndarray, top: int) -> bool:
        """Membership through the minimal containing simplex of one top hit."""
        c = self.complex
        verts = c.tri.simplices[top]
        coords = c.points[verts]
        # barycentric coordinates of q in this simplex
        a = (coords[1:] - coords[0]).T
        try:
            lam_rest = np.linalg.solve(a, q - coords[0])
        except np.linalg.LinAlgError:
            lam_rest = np.linalg.lstsq(a, q - coords[0], rcond=None)[0]
        lam = np.concatenate([[1.0 - lam_rest.sum()], lam_rest])
        if (lam < -1e-7).any():
            return False
        support = lam > 1e-9
        if support.all():
            mapped = self._top_row(top)
            return bool(self.included[c.dim][mapped])
        carrier = tuple(sorted(int(v) for v in verts[support]))
        fid = c.face_id(carrier)
        if fid is None:
            return False
        return bool(self.included[len(carrier) - 1][fid])

    _top_rows: np.ndarray | None = None

    def _top_row(self, tri_row: int) -> int:
        """Map a triangulation simplex row to its row in simplices[dim]."""
        if self._top_rows is None:
            c = self.complex
            order = {tuple(row): i for i, row in enumerate(c.simplices[c.dim])}
            self._top_rows = np.array(
                [order[tuple(sorted(r))] for r in c.tri.simplices], dtype=np.int64
            )
        return int(self._top_rows[tri_row])

    def contains(self, q) -> bool:
        """Closed-set membership of one point, with relative tolerance."""
        q = np.asarray(q, dtype=float).ravel()
        if q.shape[0] != self.dim:
            raise DimensionMismatch(
                f"query has dimension {q.shape[0]}, shape lives in {self.dim}"
            )
        return bool(self.contains_batch(q[None, :])[0])

    def contains_batch(self, qs: np.ndarray) -> np.ndarray:
        """Vectorized membership with exact handling of boundary carriers."""
        qs = np.asarray(qs, dtype=float)
        if qs.ndim != 2 or qs.shape[1] != self.dim:
            raise DimensionMismatch(
                f"queries must have shape (m, {self.dim}), got {qs.shape}"
            )
        c = self.complex
        tol = self._tol()
        out = np.zeros(len(qs), dtype=bool)

        dist, _ = c.kdtree().query(qs)
        out |= dist <= tol

        located = c.tri.find_simplex(qs, tol=1e-12)
        pending = np.nonzero(~out & (located >= 0))[0]
        if pending.size:
            dim_inc = self.included[c.dim]
            rows = np.array([self._top_row(int(located[i])) for i in pending])
            strict = dim_inc[rows]
            out[pending] = strict
            # an excluded landing simplex can still touch the point on an
            # included face; resolve those through the carrier
            for i in pending[~strict]:
                out[i] = self._carrier_included(qs[i], int(located[i]))
        return out

    def contains_batch_fast(self, qs: np.ndarray) -> np.ndarray:
        """Membership for sampling: boundary carriers ignored (measure zero)."""
        qs = np.asarray(qs, dtype=float)
        c = self.complex
        located = c.tri.find_simplex(qs)
        out = np.zeros(len(qs), dtype=bool)
        hit = located >= 0
        if hit.any():
            if self._top_rows is None:
                self._top_row(0)
            rows = self._top_rows[located[hit]]
            out[hit] = self.included[c.dim][rows]
        return out

    def included_counts(self) -> dict[int, int]:
        return {k: int(mask.sum()) for k, mask in self.included.items()}

    def to_dict(self) -> dict:
        c = self.complex
        return {
            "kind": "alpha_shape",
            "dim": c.dim,
            "alpha": self.alpha,
            "measure": self.measure,
            "component_count": self.component_count,
            "covers_vertices": self.covers_vertices,
            "n_points": c.n_points,
            "points": c.points.tolist(),
            "included_counts": {str(k): v for k, v in self.included_counts().items()},
            "included_top_simplices": c.simplices[c.dim][
                self.included[c.dim]
            ].tolist(),
        }


def alpha_complex(c: SimplicialComplex, alpha: float) -> AlphaShape:
    """Filter the complex at the given alpha and summarize it.

    Vertices are always included (filtration 0). The measure is the summed
    volume of included top simplices; components are counted on the edge
    skeleton over all vertices, so an all-vertices shape at alpha=0 has one
    component per point.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    included = {k: c.filtration[k] <= alpha for k in c.filtration}
    measure = float(c.top_volumes[included[c.dim]].sum())

    edges = c.simplices[1][included[1]]
    n = c.n_points
    if edges.size:
        graph = coo_matrix(
            (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
        )
        n_comp, _ = connected_components(graph, directed=False)
    else:
        n_comp = n

    used = np.unique(c.simplices[c.dim][included[c.dim]])
    covers = used.size == n

    return AlphaShape(
        complex=c,
        alpha=float(alpha),
        included=included,
        measure=measure,
        component_count=int(n_comp),
        covers_vertices=bool(covers),
    )
