"""LTE-assisted D2D fallback for V2V dead ends.

At a dead end the stuck vehicle switches to D2D (discovery plus one
handover), bridges the void with a single long-range D2D hop, switches back
(second handover) and the resumed V2V leg covers the rest of the road.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .config import D2dMode, TimingModel
from .mobility import VehicleState
from .radio import NeighborTable, in_range
from .routing import (
    AlertMessage,
    RecoveryMethod,
    RecoveryResult,
    RouteEvent,
    as_world,
    forward_greedy,
)


@dataclass(frozen=True)
class OhtBreakdown:
    t_discovery_ms: float
    t_handover_total_ms: float
    t_v2v_rest_ms: float
    total_ms: float


@dataclass(frozen=True)
class D2dPlan:
    mode: D2dMode
    t_discovery_ms: float
    t_handover_ms: float
    d2d_range_m: float
    bridge_from: int | None = None
    bridge_to: int | None = None


def make_plan(
    mode: D2dMode | str,
    timing: TimingModel,
    d2d_range_m: float,
    bridge_from: int | None = None,
    bridge_to: int | None = None,
) -> D2dPlan:
    """Plan with the charged discovery/handover times: both are zero when
    discovery ran proactively."""
    mode = D2dMode(mode)
    if mode is D2dMode.DISABLED:
        raise ValueError("no D2D plan for a scenario with D2D disabled")
    if mode is D2dMode.PROACTIVE:
        return D2dPlan(mode, 0.0, 0.0, d2d_range_m, bridge_from, bridge_to)
    return D2dPlan(mode, timing.t_discovery_ms, timing.t_handover_ms, d2d_range_m, bridge_from, bridge_to)


def l_rest(total_distance_m: float, d2d_range_m: float) -> float:
    """Road left for the V2V leg after the D2D bridge; 0 once the bridge
    alone spans the distance (see :func:`direct_delivery`)."""
    if d2d_range_m <= 0:
        raise ValueError("d2d_range_m must be positive")
    return max(0.0, total_distance_m - d2d_range_m)


def direct_delivery(total_distance_m: float, d2d_range_m: float) -> bool:
    return d2d_range_m >= total_distance_m


def d2d_oht(t_discovery_ms: float, t_handover_ms: float, t_v2v_rest_ms: float) -> OhtBreakdown:
    if min(t_discovery_ms, t_handover_ms, t_v2v_rest_ms) < 0:
        raise ValueError("OHT components must be non-negative")
    handovers = 2.0 * t_handover_ms
    return OhtBreakdown(t_discovery_ms, handovers, t_v2v_rest_ms, t_discovery_ms + handovers + t_v2v_rest_ms)


def discover_bridge(
    stuck_at: VehicleState,
    world,
    d2d_range_m: float,
    target_pos: float,
) -> int | None:
    """D2D-enabled vehicle within range of ``stuck_at`` that gets closest to
    the target (strictly closer than ``stuck_at``); lowest id on ties."""
    if not stuck_at.d2d_enabled:
        return None
    vehicles = world.values() if isinstance(world, Mapping) else world
    limit = abs(stuck_at.position_m - target_pos)
    best = None
    for v in vehicles:
        if v.id == stuck_at.id or not v.d2d_enabled:
            continue
        d = abs(v.position_m - target_pos)
        if d < limit and in_range(v.position_m, stuck_at.position_m, d2d_range_m):
            key = (d, v.id)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


def hybrid_recover(
    msg: AlertMessage,
    stuck_at: VehicleState | int,
    world,
    tables: Mapping[int, NeighborTable],
    plan: D2dPlan,
    timing: TimingModel,
    target_pos: float | None = None,
) -> RecoveryResult:
    world = as_world(world)
    stuck = stuck_at if isinstance(stuck_at, VehicleState) else world[stuck_at]
    target = msg.target_pos if target_pos is None else target_pos
    t_d, t_ho = plan.t_discovery_ms, plan.t_handover_ms
    if plan.mode is D2dMode.PROACTIVE:
        t_d = t_ho = 0.0

    bridge = plan.bridge_to
    if bridge is None or plan.bridge_from not in (None, stuck.id):
        bridge = discover_bridge(stuck, world, plan.d2d_range_m, target)
    events = [RouteEvent("dead_end", 0.0, stuck.id)]
    if bridge is None:
        sunk = t_d + t_ho
        events.append(RouteEvent("fail", sunk, stuck.id, "no d2d bridge"))
        return RecoveryResult(RecoveryMethod.D2D_FALLBACK, 0, None, sunk, None, tuple(events))

    hop = timing.per_hop_d2d_ms
    events.append(RouteEvent("redirect", t_d + t_ho, stuck.id, f"d2d to {bridge}"))
    rest = forward_greedy(world, tables, bridge, target, timing, target_id=msg.target_id)
    oht = d2d_oht(t_d, t_ho, rest.elapsed_ms)
    delay = oht.total_ms + hop
    if rest.delivered:
        events.append(RouteEvent("deliver", delay, msg.target_id))
    else:
        events.append(RouteEvent("fail", delay, rest.stuck_at, "dead end after d2d bridge"))
    return RecoveryResult(
        RecoveryMethod.D2D_FALLBACK, 0, bridge, delay, rest, tuple(events), oht=oht, d2d_hops=1
    )
