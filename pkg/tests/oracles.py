"""Reference computations written independently of the package.

Everything here works on plain ``{id: position}`` dictionaries with brute
force pairwise checks and breadth-first search, so that agreement with the
simulator is evidence rather than a tautology.
"""

from __future__ import annotations

import math
from collections import deque


def pairwise_edges(pos: dict, r: float) -> set[tuple]:
    """Pairs within range, each as (a, b) with vehicle ids before RSU names."""
    ids = sorted(pos, key=lambda k: (isinstance(k, str), k))
    return {
        (a, b)
        for i, a in enumerate(ids)
        for b in ids[i + 1 :]
        if abs(pos[a] - pos[b]) <= r
    }


def adjacency(pos: dict, r: float) -> dict:
    adj = {k: set() for k in pos}
    for a, b in pairwise_edges(pos, r):
        adj[a].add(b)
        adj[b].add(a)
    return adj


def bfs_depths(adj: dict, start) -> dict:
    depth = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in depth:
                depth[w] = depth[u] + 1
                queue.append(w)
    return depth


def hops_to_rsu(pos: dict, r: float, source, rsu_pos: float) -> int | None:
    """Fewest transmissions from ``source`` into the RSU (the last one
    included), or None when no vehicle in RSU range is reachable."""
    depth = bfs_depths(adjacency(pos, r), source)
    best = [d for v, d in depth.items() if abs(pos[v] - rsu_pos) <= r]
    return min(best) + 1 if best else None


def closer_neighbor_exists(pos: dict, r: float, v, target: float) -> bool:
    """Some graph neighbour of ``v`` is strictly nearer the target."""
    here = abs(pos[v] - target)
    return any(abs(pos[w] - target) < here for w in adjacency(pos, r)[v])


def reachable_any_rsu(pos: dict, r: float, starts, rsu_positions) -> bool:
    adj = adjacency(pos, r)
    for s in starts:
        for v in bfs_depths(adj, s):
            if any(abs(pos[v] - q) <= r for q in rsu_positions):
                return True
    return False


def idm(v: float, v0: float, gap: float | None, dv: float, a=1.4, b=2.0, s0=2.0, T=1.5, delta=4.0) -> float:
    """Textbook IDM acceleration, evaluated term by term."""
    free_term = (v / v0) ** delta
    if gap is None:
        return a * (1.0 - free_term)
    desired_gap = s0 + v * T + (v * dv) / (2.0 * math.sqrt(a * b))
    return a * (1.0 - free_term - (desired_gap / gap) ** 2)


def ideal_chain_delay(distance: float, spacing: float, per_hop: float) -> float:
    return math.ceil(distance / spacing) * per_hop
