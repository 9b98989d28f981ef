"""Potentially-safe state extraction on the observed transition graph.

Safe trajectories contribute their states as vertices and their gap-free
consecutive pairs as directed edges. Every state of every unsafe trajectory
then seeds a reachability query, and everything reached is pruned; the
surviving vertices form the potentially-safe set.

Vertex identity is the exact state value vector, so two states match only
when their coordinates are binary-equal. ``match_radius`` relaxes seeding:
a seed grabs every vertex within that Chebyshev (max-norm) distance.

Removal is computed as one union of closures over the frozen graph rather
than sequentially. The two are equivalent: ancestor sets, descendant sets,
and undirected components are all transitively closed, so any vertex a
later query could reach through an earlier-removed vertex was already in
the earlier closure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .oss import OssState, StateTrajectory, TransitionSet, classify_trajectories

REACH_MODES = ("undirected", "ancestors", "descendants")

Vertex = tuple[float, ...]


@dataclass
class SafeGraph:
    """Directed graph of safe-trajectory transitions, keyed by state values."""

    succ: dict[Vertex, set[Vertex]] = field(default_factory=dict)
    pred: dict[Vertex, set[Vertex]] = field(default_factory=dict)

    @property
    def vertices(self) -> set[Vertex]:
        return set(self.succ)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.succ

    def __len__(self) -> int:
        return len(self.succ)

    def edge_count(self) -> int:
        return sum(len(s) for s in self.succ.values())

    def add_vertex(self, v: Vertex) -> None:
        self.succ.setdefault(v, set())
        self.pred.setdefault(v, set())

    def add_edge(self, a: Vertex, b: Vertex) -> None:
        self.add_vertex(a)
        self.add_vertex(b)
        self.succ[a].add(b)
        self.pred[b].add(a)

    def without(self, removed: set[Vertex]) -> "SafeGraph":
        """Copy with the given vertices (and their incident edges) deleted."""
        g = SafeGraph()
        for v, outs in self.succ.items():
            if v in removed:
                continue
            g.add_vertex(v)
            for w in outs:
                if w not in removed:
                    g.add_edge(v, w)
        return g


def build_safe_graph(safe: Sequence[StateTrajectory]) -> SafeGraph:
    """Vertices are deduplicated state values; edges are gap-free pairs."""
    g = SafeGraph()
    for t in safe:
        for s in t.states:
            g.add_vertex(s.values)
        for a, b in t.pairs():
            g.add_edge(a.values, b.values)
    return g


def _as_vertex(state: OssState | Vertex) -> Vertex:
    return state.values if isinstance(state, OssState) else tuple(state)


def _seeds(g: SafeGraph, v: Vertex, match_radius: float) -> list[Vertex]:
    if match_radius <= 0.0:
        return [v] if v in g.succ else []
    verts = list(g.succ)
    if not verts:
        return []
    arr = np.asarray(verts, dtype=float)
    q = np.asarray(v, dtype=float)
    if arr.shape[1] != q.shape[0]:
        return []
    hit = np.abs(arr - q).max(axis=1) <= match_radius
    return [verts[i] for i in np.nonzero(hit)[0]]


def reachable(
    state: OssState | Vertex,
    g: SafeGraph,
    mode: str = "undirected",
    match_radius: float = 0.0,
) -> set[Vertex]:
    """Closure of the graph vertices matching ``state``.

    mode selects edge traversal: ancestors walks edges backwards,
    descendants forwards, undirected both ways (connected component).
    A state matching no vertex yields the empty set.
    """
    if mode not in REACH_MODES:
        raise ValueError(f"unknown reachability mode {mode!r}; choose from {REACH_MODES}")
    stack = _seeds(g, _as_vertex(state), match_radius)
    seen: set[Vertex] = set(stack)
    while stack:
        v = stack.pop()
        neighbours: Iterable[Vertex]
        if mode == "ancestors":
            neighbours = g.pred[v]
        elif mode == "descendants":
            neighbours = g.succ[v]
        else:
            neighbours = g.succ[v] | g.pred[v]
        for w in neighbours:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


@dataclass(frozen=True)
class SafeExtraction:
    """Result of the pruning pass."""

    safe_values: frozenset[Vertex]
    graph: SafeGraph
    removed: frozenset[Vertex]
    safe_trajectories: tuple[StateTrajectory, ...]
    unsafe_trajectories: tuple[StateTrajectory, ...]
    seeds_matched: int

    @property
    def states(self) -> frozenset[Vertex]:
        return self.safe_values


def extract_safe_states(
    trajs: Sequence[StateTrajectory],
    mode: str = "undirected",
    match_radius: float = 0.0,
) -> SafeExtraction:
    """Classify trajectories, build the safe graph, prune everything
    reachable from any state of any unsafe trajectory.

    Removals are unioned over the frozen graph (see module docstring for
    why that equals sequential removal), making the result independent of
    unsafe-state order.
    """
    safe, unsafe = classify_trajectories(trajs)
    g = build_safe_graph(safe)
    removed: set[Vertex] = set()
    seeds_matched = 0
    for t in unsafe:
        for s in t.states:
            hits = _seeds(g, s.values, match_radius)
            if hits:
                seeds_matched += 1
            for h in hits:
                if h not in removed:
                    removed |= reachable(h, g, mode=mode, match_radius=0.0)
    pruned = g.without(removed)
    return SafeExtraction(
        safe_values=frozenset(pruned.succ),
        graph=pruned,
        removed=frozenset(removed),
        safe_trajectories=tuple(safe),
        unsafe_trajectories=tuple(unsafe),
        seeds_matched=seeds_matched,
    )


def partition_transitions(
    td: TransitionSet, safe_values: Iterable[Vertex] | Mapping | frozenset
) -> tuple[TransitionSet, TransitionSet]:
    """Split transitions into (both endpoints retained, the rest).

    The first component's size is the safe count s, the second's the
    complement count c, with s + c = len(td).
    """
    keep = set(safe_values)
    ins, outs = [], []
    for a, b in td.pairs:
        if a.values in keep and b.values in keep:
            ins.append((a, b))
        else:
            outs.append((a, b))
    return TransitionSet(tuple(ins)), TransitionSet(tuple(outs))
