"""V2V relaying toward an RSU: greedy forwarding, broadcast flooding,
dead-end detection and the backward recovery procedure (V2V-RA)."""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .config import TimingModel
from .mobility import VehicleState
from .radio import NeighborTable, NeighborTables, NodeId, Rsu, in_range, per_hop_delay


class Direction(str, enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


class MessageState(str, enum.Enum):
    IN_FLIGHT = "in_flight"
    DEAD_END = "dead_end"
    RECOVERING = "recovering"
    DELIVERED = "delivered"
    FAILED = "failed"


class Outcome(str, enum.Enum):
    DELIVERED = "delivered"
    DEAD_END = "dead_end"


class RecoveryMethod(str, enum.Enum):
    REDIRECT_NEIGHBOR = "redirect_neighbor"
    ALTERNATE_RSU = "alternate_rsu"
    BACKWARD_RECURSION_EXHAUSTED = "backward_recursion_exhausted"
    D2D_FALLBACK = "d2d_fallback"


@dataclass
class AlertMessage:
    msg_id: int
    origin_id: int
    target_id: str
    target_pos: float
    created_s: float = 0.0
    hop_trace: list[int] = field(default_factory=list)
    t_failure_s: float | None = None
    t_arrival_s: float | None = None
    direction: Direction = Direction.FORWARD
    state: MessageState = MessageState.IN_FLIGHT


@dataclass(frozen=True)
class RouteResult:
    outcome: Outcome
    hops: int
    path: tuple[NodeId, ...]
    stuck_at: int | None
    elapsed_ms: float

    @property
    def delivered(self) -> bool:
        return self.outcome is Outcome.DELIVERED


@dataclass(frozen=True)
class RouteEvent:
    event: str  # hop | dead_end | backward | redirect | reverse | deliver | fail
    time_ms: float
    vehicle_id: NodeId
    detail: str = ""


@dataclass(frozen=True)
class RecoveryResult:
    method: RecoveryMethod
    backward_hops: int
    resumed_from: int | None
    recovery_delay_ms: float
    final: RouteResult | None
    events: tuple[RouteEvent, ...] = ()
    # set by the D2D fallback only
    oht: Any = None
    d2d_hops: int = 0

    @property
    def delivered(self) -> bool:
        return self.final is not None and self.final.delivered


def as_world(world: Mapping[int, VehicleState] | Sequence[VehicleState]) -> Mapping[int, VehicleState]:
    if isinstance(world, Mapping):
        return world
    return {s.id: s for s in world}


def _vehicle(world: Mapping[int, VehicleState], v: VehicleState | int) -> VehicleState:
    return v if isinstance(v, VehicleState) else world[v]


def _degree(tables, vehicle_id: int) -> int:
    if isinstance(tables, NeighborTables):
        return tables.degree(vehicle_id)
    return len(tables[vehicle_id])


def greedy_next_hop(
    current: VehicleState,
    target_pos: float,
    table: NeighborTable,
    exclude: Iterable[int] = (),
) -> int | None:
    """Neighbour strictly closer to ``target_pos`` with the largest progress;
    ties go to the lowest id."""
    excluded = exclude if isinstance(exclude, (set, frozenset)) else set(exclude)
    limit = abs(current.position_m - target_pos)
    best = None
    for e in table.entries:
        d = abs(e.position_m - target_pos)
        if d < limit and e.vehicle_id not in excluded:
            key = (d, e.vehicle_id)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


def is_dead_end(current: VehicleState, target_pos: float, table: NeighborTable) -> bool:
    if in_range(current.position_m, target_pos, table.range_m):
        return False
    return greedy_next_hop(current, target_pos, table) is None


def forward_greedy(
    world,
    tables: Mapping[int, NeighborTable],
    source: VehicleState | int,
    target_pos: float,
    timing: TimingModel = TimingModel(),
    *,
    target_id: NodeId = "rsu",
    per_hop_ms: float | None = None,
    exclude: Iterable[int] = (),
) -> RouteResult:
    """Relay hop by hop with :func:`greedy_next_hop` until a vehicle within
    range of the target hands the message to it, or no neighbour is closer.

    Each hop costs the per-hop base (V2V by default) inflated by the
    transmitter's neighbour count.  The final hop into the RSU counts.
    """
    world = as_world(world)
    base = timing.per_hop_v2v_ms if per_hop_ms is None else per_hop_ms
    coeff = timing.interference_coeff
    cur = _vehicle(world, source)
    visited = set(exclude)
    visited.add(cur.id)
    path: list[NodeId] = [cur.id]
    elapsed = 0.0
    # snapshot tables answer degree and next hop by bisection
    indexed = isinstance(tables, NeighborTables)
    while True:
        if indexed:
            r, degree = tables.range_m, tables.degree(cur.id)
        else:
            table = tables[cur.id]
            r, degree = table.range_m, len(table)
        if in_range(cur.position_m, target_pos, r):
            elapsed += per_hop_delay(base, degree, coeff)
            path.append(target_id)
            return RouteResult(Outcome.DELIVERED, len(path) - 1, tuple(path), None, elapsed)
        if indexed:
            nxt = tables.greedy_hop(cur.id, target_pos, visited)
        else:
            nxt = greedy_next_hop(cur, target_pos, table, visited)
        if nxt is None:
            return RouteResult(Outcome.DEAD_END, len(path) - 1, tuple(path), cur.id, elapsed)
        elapsed += per_hop_delay(base, degree, coeff)
        path.append(nxt)
        visited.add(nxt)
        cur = world[nxt]


def broadcast_relay(
    world,
    tables: Mapping[int, NeighborTable],
    source: VehicleState | int,
    target_pos: float,
    timing: TimingModel = TimingModel(),
    *,
    target_id: NodeId = "rsu",
) -> RouteResult:
    """Flood in breadth-first waves; every vehicle rebroadcasts once.

    Delivery happens at the first wave containing a vehicle in range of the
    target.  The reported path is the BFS-tree branch to the lowest-id such
    vehicle, and its delay is summed along that branch.
    """
    world = as_world(world)
    src = _vehicle(world, source)
    r = tables[src.id].range_m
    parent: dict[int, int | None] = {src.id: None}
    frontier = [src.id]

    def branch(v: int) -> list[int]:
        out = []
        while v is not None:
            out.append(v)
            v = parent[v]
        return out[::-1]

    def cost(path: Sequence[NodeId]) -> float:
        return sum(
            per_hop_delay(timing.per_hop_v2v_ms, len(tables[v]), timing.interference_coeff)
            for v in path[:-1]
        )

    while frontier:
        ready = [v for v in frontier if in_range(world[v].position_m, target_pos, r)]
        if ready:
            path = branch(min(ready)) + [target_id]
            return RouteResult(Outcome.DELIVERED, len(path) - 1, tuple(path), None, cost(path))
        wave = []
        for v in sorted(frontier):
            for n in sorted(tables[v].ids()):
                if n not in parent:
                    parent[n] = v
                    wave.append(n)
        frontier = wave
    stuck = min(parent, key=lambda v: (abs(world[v].position_m - target_pos), v))
    path = branch(stuck)
    return RouteResult(Outcome.DEAD_END, len(path) - 1, tuple(path), stuck, cost(path))


def _redirect_candidate(
    dead_end: VehicleState, target_pos: float, tables, owner: VehicleState, visited: set[int]
) -> int | None:
    # a neighbour that is not past the reported dead end cannot get further
    # than it under a common range, so only those beyond it are worth a try
    if isinstance(tables, NeighborTables) and abs(owner.position_m - target_pos) > tables.range_m:
        return tables.greedy_hop(owner.id, target_pos, visited, from_pos=dead_end.position_m)
    return greedy_next_hop(dead_end, target_pos, tables[owner.id], visited)


def _try_alternate_rsu(
    world, tables, start: VehicleState, rsus: Sequence[Rsu], target_id: str, timing: TimingModel
) -> RouteResult | None:
    others = [r for r in rsus if r.id != target_id]
    others.sort(key=lambda r: (abs(r.position_m - start.position_m), r.id))
    for rsu in others:
        route = forward_greedy(world, tables, start, rsu.position_m, timing, target_id=rsu.id)
        if route.delivered:
            return route
    return None


def v2v_ra_recover(
    world,
    tables: Mapping[int, NeighborTable],
    msg: AlertMessage,
    stuck_at: VehicleState | int,
    timing: TimingModel,
    rsus: Sequence[Rsu],
) -> RecoveryResult:
    """Backward recovery from a dead end.

    The stuck vehicle hands the message back to its predecessor, which
    (a) redirects it to an untried neighbour past the dead end, else
    (b) turns it around toward another RSU, else (c) becomes the dead end
    itself and the procedure repeats one hop further back.  A redirect that
    dead-ends again restarts the procedure from there with the accumulated
    trace, so every vehicle is tried at most once.
    """
    if msg.state not in (MessageState.DEAD_END, MessageState.RECOVERING):
        raise ValueError(f"message {msg.msg_id} is not at a dead end (state={msg.state.value})")
    world = as_world(world)
    dead = _vehicle(world, stuck_at)
    per_back = timing.v2v_recovery_per_hop_ms
    chain = list(msg.hop_trace)
    if chain and chain[-1] == dead.id:
        chain.pop()
    visited = set(chain) | {dead.id}
    backward = 0
    continuation = 0.0
    clock = 0.0
    events: list[RouteEvent] = [RouteEvent("dead_end", 0.0, dead.id)]

    def done(method, resumed_from, final):
        delay = backward * per_back + continuation
        return RecoveryResult(method, backward, resumed_from, delay, final, tuple(events))

    if not chain:
        # the origin is the dead end; it can still turn toward another RSU
        alt = _try_alternate_rsu(world, tables, dead, rsus, msg.target_id, timing)
        if alt is not None:
            continuation += alt.elapsed_ms
            events.append(RouteEvent("reverse", clock, dead.id, alt.path[-1]))
            events.append(RouteEvent("deliver", clock + alt.elapsed_ms, alt.path[-1]))
            return done(RecoveryMethod.ALTERNATE_RSU, dead.id, alt)
        events.append(RouteEvent("fail", clock, dead.id, "exhausted"))
        return done(RecoveryMethod.BACKWARD_RECURSION_EXHAUSTED, None, None)

    while chain:
        pred = world[chain.pop()]
        backward += 1
        clock += per_back
        events.append(RouteEvent("backward", clock, pred.id, f"from {dead.id}"))

        cand = _redirect_candidate(dead, msg.target_pos, tables, pred, visited)
        if cand is not None:
            hop = per_hop_delay(timing.per_hop_v2v_ms, _degree(tables, pred.id), timing.interference_coeff)
            leg = forward_greedy(
                world, tables, cand, msg.target_pos, timing, target_id=msg.target_id, exclude=visited
            )
            route = RouteResult(
                leg.outcome, leg.hops + 1, (pred.id,) + leg.path, leg.stuck_at, hop + leg.elapsed_ms
            )
            continuation += route.elapsed_ms
            events.append(RouteEvent("redirect", clock, pred.id, f"to {cand}"))
            clock += route.elapsed_ms
            if route.delivered:
                events.append(RouteEvent("deliver", clock, msg.target_id))
                return done(RecoveryMethod.REDIRECT_NEIGHBOR, pred.id, route)
            events.append(RouteEvent("dead_end", clock, leg.stuck_at))
            visited.update(leg.path)
            chain.append(pred.id)
            chain.extend(leg.path[:-1])
            dead = world[leg.stuck_at]
            continue

        alt = _try_alternate_rsu(world, tables, pred, rsus, msg.target_id, timing)
        if alt is not None:
            continuation += alt.elapsed_ms
            events.append(RouteEvent("reverse", clock, pred.id, alt.path[-1]))
            events.append(RouteEvent("deliver", clock + alt.elapsed_ms, alt.path[-1]))
            return done(RecoveryMethod.ALTERNATE_RSU, pred.id, alt)
        dead = pred

    events.append(RouteEvent("fail", clock, dead.id, "exhausted"))
    return done(RecoveryMethod.BACKWARD_RECURSION_EXHAUSTED, None, None)
