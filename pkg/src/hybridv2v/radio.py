"""Unit-disk connectivity on the 1-D road."""

from __future__ import annotations

import bisect
import csv
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

from .mobility import VehicleState

NodeId = int | str


def in_range(pos_a: float, pos_b: float, range_m: float) -> bool:
    return abs(pos_a - pos_b) <= range_m


def per_hop_delay(base_ms: float, neighbor_count: int, interference_coeff: float) -> float:
    """Per-hop delay inflated linearly by every contending neighbour beyond
    the first."""
    if neighbor_count < 0:
        raise ValueError("neighbor_count must be >= 0")
    return base_ms * (1.0 + interference_coeff * max(0, neighbor_count - 1))


@dataclass(frozen=True)
class Rsu:
    id: str
    position_m: float


def make_rsus(positions: Sequence[float]) -> list[Rsu]:
    return [Rsu(f"rsu{k}", float(p)) for k, p in enumerate(positions)]


class NeighborEntry(NamedTuple):
    vehicle_id: int
    position_m: float
    last_seen_s: float


@dataclass(frozen=True)
class NeighborTable:
    owner_id: int
    entries: tuple[NeighborEntry, ...]
    range_m: float

    def ids(self) -> list[int]:
        return [e.vehicle_id for e in self.entries]

    def __len__(self):
        return len(self.entries)


class NeighborTables(Mapping):
    """vehicle id -> NeighborTable, computed on first access.

    Positions are kept sorted so one lookup is a bisection plus an exact
    ``in_range`` filter of the candidate slice.
    """

    def __init__(self, world: Sequence[VehicleState], range_m: float, now_s: float = 0.0):
        self.range_m = float(range_m)
        self.now_s = float(now_s)
        order = sorted(world, key=lambda s: (s.position_m, s.id))
        self._pos = [s.position_m for s in order]
        self._ids = [s.id for s in order]
        self._by_id = {s.id: s for s in order}
        self._cache: dict[int, NeighborTable] = {}
        self._spans: dict[int, tuple[int, int]] = {}

    def with_range(self, range_m: float) -> "NeighborTables":
        """Tables over the same snapshot for another radio range."""
        other = object.__new__(NeighborTables)
        other.range_m = float(range_m)
        other.now_s = self.now_s
        other._pos, other._ids, other._by_id = self._pos, self._ids, self._by_id
        other._cache, other._spans = {}, {}
        return other

    def __getitem__(self, vehicle_id: int) -> NeighborTable:
        table = self._cache.get(vehicle_id)
        if table is None:
            table = self._build(vehicle_id)
            self._cache[vehicle_id] = table
        return table

    def _build(self, vehicle_id: int) -> NeighborTable:
        owner = self._by_id[vehicle_id]
        p, r = owner.position_m, self.range_m
        slack = 1e-9 * max(1.0, abs(p) + r)
        lo = bisect.bisect_left(self._pos, p - r - slack)
        hi = bisect.bisect_right(self._pos, p + r + slack)
        ids, pos, now = self._ids, self._pos, self.now_s
        entries = tuple(
            NeighborEntry(ids[k], pos[k], now)
            for k in range(lo, hi)
            if ids[k] != vehicle_id and abs(pos[k] - p) <= r
        )
        return NeighborTable(vehicle_id, entries, r)

    def _span(self, p: float, r: float) -> tuple[int, int]:
        # positions within r of p form one contiguous run of the sorted list
        pos = self._pos
        slack = 1e-9 * max(1.0, abs(p) + r)
        lo = bisect.bisect_left(pos, p - r - slack)
        hi = bisect.bisect_right(pos, p + r + slack)
        while lo < hi and abs(pos[lo] - p) > r:
            lo += 1
        while hi > lo and abs(pos[hi - 1] - p) > r:
            hi -= 1
        return lo, hi

    def _own_span(self, vehicle_id: int) -> tuple[int, int]:
        span = self._spans.get(vehicle_id)
        if span is None:
            span = self._spans[vehicle_id] = self._span(self._by_id[vehicle_id].position_m, self.range_m)
        return span

    def degree(self, vehicle_id: int) -> int:
        """Neighbour count without materialising the table."""
        lo, hi = self._own_span(vehicle_id)
        return hi - lo - 1

    def greedy_hop(
        self, vehicle_id: int, target_pos: float, exclude=frozenset(), from_pos: float | None = None
    ) -> int | None:
        """Same choice as a scan of the full table for the neighbour closest
        to ``target_pos`` (lowest id on ties) that beats ``from_pos`` (the
        owner's position by default).  The target must be out of range."""
        p = self._by_id[vehicle_id].position_m
        if abs(p - target_pos) <= self.range_m:
            raise ValueError("greedy_hop expects a target beyond radio range")
        limit = abs((p if from_pos is None else from_pos) - target_pos)
        lo, hi = self._own_span(vehicle_id)
        ks = range(hi - 1, lo - 1, -1) if target_pos > p else range(lo, hi)
        ids, pos = self._ids, self._pos
        best_d = best_id = None
        for k in ks:
            vid = ids[k]
            if vid == vehicle_id or vid in exclude:
                continue
            d = abs(pos[k] - target_pos)
            if best_d is None:
                if d >= limit:
                    return None
                best_d, best_id = d, vid
            elif d == best_d:
                best_id = min(best_id, vid)
            else:
                break
        return best_id

    def __iter__(self) -> Iterator[int]:
        return iter(self._ids)

    def __len__(self):
        return len(self._ids)

    def within(self, position_m: float, range_m: float) -> list[int]:
        """Ids of vehicles within ``range_m`` of an arbitrary road position."""
        slack = 1e-9 * max(1.0, abs(position_m) + range_m)
        lo = bisect.bisect_left(self._pos, position_m - range_m - slack)
        hi = bisect.bisect_right(self._pos, position_m + range_m + slack)
        return [self._ids[k] for k in range(lo, hi) if in_range(position_m, self._pos[k], range_m)]


def build_neighbor_tables(
    world: Sequence[VehicleState], range_m: float, now_s: float = 0.0
) -> NeighborTables:
    return NeighborTables(world, range_m, now_s)


class StaticTables(dict):
    """Plain dict of prebuilt tables, for hand-built or stale views."""

    def __init__(self, tables: dict, range_m: float):
        super().__init__(tables)
        self.range_m = float(range_m)


@dataclass(frozen=True)
class Edge:
    a: NodeId
    b: NodeId
    kind: str  # "v2v" | "d2d"


def _node_key(n: NodeId):
    return (1, n) if isinstance(n, str) else (0, n)


def _edge(a: NodeId, b: NodeId, kind: str) -> Edge:
    if _node_key(b) < _node_key(a):
        a, b = b, a
    return Edge(a, b, kind)


@dataclass(frozen=True)
class ConnectivityGraph:
    nodes: frozenset
    edges: frozenset = field(default_factory=frozenset)

    def edge_set(self, kind: str) -> set[tuple[NodeId, NodeId]]:
        return {(e.a, e.b) for e in self.edges if e.kind == kind}

    def adjacency(self, kind: str = "v2v") -> dict[NodeId, set[NodeId]]:
        adj: dict[NodeId, set[NodeId]] = {n: set() for n in self.nodes}
        for e in self.edges:
            if e.kind == kind:
                adj[e.a].add(e.b)
                adj[e.b].add(e.a)
        return adj

    def write_csv(self, path) -> None:
        rows = sorted(self.edges, key=lambda e: (_node_key(e.a), _node_key(e.b), e.kind))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_a", "node_b", "kind"])
            for e in rows:
                w.writerow([e.a, e.b, e.kind])


def connectivity_graph(
    world: Sequence[VehicleState],
    rsus: Sequence[Rsu],
    v2v_range_m: float,
    d2d_range_m: float,
) -> ConnectivityGraph:
    """Ground-truth graph by a sweep over position-sorted nodes.

    RSUs take part in v2v (.11p) links only and are never linked together.
    """
    nodes = [(s.position_m, s.id, s.d2d_enabled) for s in world]
    nodes += [(r.position_m, r.id, False) for r in rsus]
    nodes.sort(key=lambda n: (n[0], _node_key(n[1])))
    reach = max(v2v_range_m, d2d_range_m)
    edges = set()
    for i, (pa, a, da) in enumerate(nodes):
        for pb, b, db in nodes[i + 1 :]:
            if pb - pa > reach and not in_range(pa, pb, reach):
                break
            if isinstance(a, str) and isinstance(b, str):
                continue
            if in_range(pa, pb, v2v_range_m):
                edges.add(_edge(a, b, "v2v"))
            if da and db and in_range(pa, pb, d2d_range_m):
                edges.add(_edge(a, b, "d2d"))
    return ConnectivityGraph(frozenset(n[1] for n in nodes), frozenset(edges))
