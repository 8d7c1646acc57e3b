"""Deterministic discrete-event driver.

Mobility ticks every 0.5 s; alerts are emitted every ``packet_interval_s``
by the source vehicle and relayed atomically against the world snapshot at
emission time.  Delays come from the timing model, not from event
interleaving.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import itertools
import os
import time
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .config import ConfigError, D2dMode, ScenarioConfig, check
from .d2d import hybrid_recover, make_plan
from .metrics import DeliveryRecord
from .mobility import Fleet, IdmParams, VehicleState, kmh_to_ms, place_vehicles, write_trace
from .radio import NeighborTables, make_rsus, per_hop_delay
from .routing import (
    AlertMessage,
    MessageState,
    RecoveryMethod,
    RouteResult,
    forward_greedy,
    v2v_ra_recover,
)

MOBILITY_DT_S = 0.5


class ScenarioError(RuntimeError):
    pass


# --- random streams ----------------------------------------------------------


def _philox_key(seed: int, stream: str) -> np.ndarray:
    digest = hashlib.blake2b(f"{seed}/{stream}".encode(), digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


def substream(seed: int, stream: str) -> np.random.Generator:
    """Independent counter-based generator for one subsystem."""
    return np.random.Generator(np.random.Philox(key=_philox_key(seed, stream)))


@dataclass(frozen=True)
class RngState:
    seed: int
    stream: str = "default"
    counter: int = 0


def next_random(state: RngState) -> tuple[float, RngState]:
    """One uniform draw in [0, 1) and the advanced state."""
    bits = np.random.Philox(key=_philox_key(state.seed, state.stream), counter=state.counter)
    raw = int(bits.random_raw())
    return (raw >> 11) * 2.0**-53, replace(state, counter=state.counter + 1)


# --- events ------------------------------------------------------------------


class EventKind(str, enum.Enum):
    MOBILITY_TICK = "mobility_tick"
    EMIT_ALERT = "emit_alert"
    INJECT_FAILURE = "inject_failure"
    RELAY_EPISODE = "relay_episode"
    END_OF_RUN = "end_of_run"


@dataclass(order=True, frozen=True)
class Event:
    time_s: float
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(default=None, compare=False)


class EventQueue:
    def __init__(self):
        self._heap: list[Event] = []
        self._seq = itertools.count()
        self.now = 0.0

    def push(self, time_s: float, kind: EventKind, payload=None) -> Event:
        if time_s < self.now:
            raise ValueError(f"cannot schedule {kind.value} in the past ({time_s} < {self.now})")
        ev = Event(time_s, next(self._seq), kind, payload)
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)
        self.now = ev.time_s
        return ev

    def __len__(self):
        return len(self._heap)


# --- failure injection -------------------------------------------------------


def inject_dead_end(
    world: Sequence[VehicleState],
    failure_distance_m: float,
    rsu_pos: float,
    gap_m: float,
    strict: bool = True,
) -> list[VehicleState]:
    """Carve a void of ``gap_m`` ahead of the point ``failure_distance_m``
    before the RSU.

    The nearest vehicle behind the point is moved onto it and the nearest one
    past the void onto its far edge; everything in between is dropped.  With
    ``strict`` a missing edge vehicle is an error, otherwise the void is
    carved with whatever vehicles exist.
    """
    if failure_distance_m > rsu_pos:
        raise ScenarioError("failure point would lie before the start of the road")
    edge = rsu_pos - failure_distance_m
    far = edge + gap_m
    behind = [v for v in world if v.position_m <= edge]
    ahead = [v for v in world if v.position_m >= far]
    if strict and (not behind or not ahead):
        raise ScenarioError(
            f"cannot build a {gap_m:g} m void at {edge:g} m: need vehicles on both sides"
        )
    near_v = max(behind, key=lambda v: (v.position_m, -v.id)) if behind else None
    far_v = min(ahead, key=lambda v: (v.position_m, v.id)) if ahead else None
    out = []
    for v in world:
        if near_v is not None and v.id == near_v.id:
            out.append(replace(v, position_m=edge))
        elif far_v is not None and v.id == far_v.id:
            out.append(replace(v, position_m=far))
        elif not edge < v.position_m < far:
            out.append(v)
    return sorted(out, key=lambda v: (v.position_m, v.id))


def choose_source(world: Sequence[VehicleState], config: ScenarioConfig) -> VehicleState:
    if config.source_position_m is not None:
        p = config.source_position_m
        return min(world, key=lambda v: (abs(v.position_m - p), v.id))

    pos = np.array([v.position_m for v in world])
    rsus = np.array(config.rsu_positions_m)
    dist = np.abs(pos[:, None] - rsus[None, :]).min(axis=1)
    far = np.flatnonzero(dist == dist.max())
    return min((world[k] for k in far), key=lambda v: v.id)


# --- run ---------------------------------------------------------------------


@dataclass
class SimResult:
    config_echo: ScenarioConfig
    deliveries: list[DeliveryRecord]
    trace_path: str | None = None
    wall_time_s: float = 0.0
    route_log: list[tuple] = field(default_factory=list)
    event_times: list[float] = field(default_factory=list)


def seed_from_env(config: ScenarioConfig) -> ScenarioConfig:
    raw = os.environ.get("SIM_SEED")
    if raw is None or raw == "":
        return config
    try:
        return replace(config, seed=int(raw))
    except ValueError:
        raise ConfigError(f"SIM_SEED must be an integer, got {raw!r}") from None


_METHOD_NAMES = {
    RecoveryMethod.REDIRECT_NEIGHBOR: "redirect_neighbor",
    RecoveryMethod.ALTERNATE_RSU: "alternate_rsu",
    RecoveryMethod.D2D_FALLBACK: "d2d_fallback",
    RecoveryMethod.BACKWARD_RECURSION_EXHAUSTED: "exhausted",
}


def _mobility_key(cfg: ScenarioConfig) -> tuple:
    """Fields that fix the vehicle trajectories, the alert schedule, the
    injected void and the source choice."""
    return (
        cfg.seed, cfg.vehicle_count, cfg.road_length_m, cfg.speed_min_kmh, cfg.speed_max_kmh,
        cfg.sim_duration_s, cfg.packet_interval_s, cfg.rsu_positions_m, cfg.source_position_m,
        cfg.failure_distance_m, cfg.dead_end_gap_m if cfg.failure_distance_m is not None else None,
    )


class _World:
    """Vehicle motion plus the per-instant snapshot shared by every relay
    configuration driven from it."""

    def __init__(self, config: ScenarioConfig, trace: bool):
        self.cfg = config
        self.idm = IdmParams()
        self.target_pos = float(config.rsu_positions_m[0])
        self.speed_range = (kmh_to_ms(config.speed_min_kmh), kmh_to_ms(config.speed_max_kmh))
        placement = substream(config.seed, "placement")
        self.speed_rng = substream(config.seed, "speeds")
        vehicles = place_vehicles(
            config.vehicle_count,
            config.road_length_m,
            placement,
            (config.speed_min_kmh, config.speed_max_kmh),
            self.idm,
        )
        self.fleet = Fleet(vehicles)
        self.failure_active = False
        self.trace_rows: list | None = [] if trace else None

    def tick(self, now: float) -> None:
        self.fleet.step(self.idm, MOBILITY_DT_S, self.cfg.road_length_m, self.speed_rng, self.speed_range)
        if self.trace_rows is not None:
            f = self.fleet
            self.trace_rows.extend(zip(itertools.repeat(now), f.ids.tolist(), f.x.tolist(), f.v.tolist()))

    def snapshot(self, now: float) -> "_Snapshot":
        world = self.fleet.states()
        if self.failure_active:
            world = inject_dead_end(
                world, self.cfg.failure_distance_m, self.target_pos, self.cfg.dead_end_gap_m, strict=False
            )
        return _Snapshot(world, now, choose_source(world, self.cfg))


class _Snapshot:
    def __init__(self, world: list[VehicleState], now: float, source: VehicleState):
        self.world = world
        self.now = now
        self.source = source
        self.by_id = {v.id: v for v in world}
        self._tables: dict[float, NeighborTables] = {}

    def tables(self, range_m: float) -> NeighborTables:
        t = self._tables.get(range_m)
        if t is None:
            if self._tables:
                t = next(iter(self._tables.values())).with_range(range_m)
            else:
                t = NeighborTables(self.world, range_m, self.now)
            self._tables[range_m] = t
        return t


class _Relayer:
    """Alert handling and bookkeeping for one configuration."""

    def __init__(self, config: ScenarioConfig, record_routes: bool):
        self.cfg = config
        self.timing = config.resolved_timing()
        self.rsus = make_rsus(config.rsu_positions_m)
        self.target = self.rsus[0]
        self.deliveries: list[DeliveryRecord] = []
        self.record_routes = record_routes
        self.route_log: list[tuple] = []

    def _log_route(self, msg_id: int, route: RouteResult, tables, base: float) -> None:
        t = 0.0
        for a, b in zip(route.path, route.path[1:]):
            t += per_hop_delay(base, tables.degree(a), self.timing.interference_coeff)
            self.route_log.append((msg_id, "deliver" if isinstance(b, str) else "hop", t, b, f"from {a}"))
        if route.stuck_at is not None:
            self.route_log.append((msg_id, "dead_end", t, route.stuck_at, ""))

    def relay(self, msg_id: int, snap: _Snapshot) -> None:
        cfg, timing, now = self.cfg, self.timing, snap.now
        by_id = snap.by_id
        tables = snap.tables(cfg.v2v_range_m)
        msg = AlertMessage(msg_id, snap.source.id, self.target.id, self.target.position_m, created_s=now)
        route = forward_greedy(by_id, tables, snap.source, msg.target_pos, timing, target_id=msg.target_id)
        if self.record_routes:
            self._log_route(msg_id, route, tables, timing.per_hop_v2v_ms)
        if route.delivered:
            msg.state = MessageState.DELIVERED
            msg.t_arrival_s = now + route.elapsed_ms / 1000.0
            self.deliveries.append(
                DeliveryRecord(msg_id, "delivered", route.hops, route.hops, 0, route.elapsed_ms, 0.0, created_s=now)
            )
            return

        msg.state = MessageState.DEAD_END
        msg.hop_trace = list(route.path)
        msg.t_failure_s = now + route.elapsed_ms / 1000.0
        if cfg.d2d_mode is D2dMode.DISABLED:
            rec = v2v_ra_recover(by_id, tables, msg, route.stuck_at, timing, self.rsus)
        else:
            plan = make_plan(cfg.d2d_mode, cfg.timing, cfg.d2d_range_m, bridge_from=route.stuck_at)
            rec = hybrid_recover(msg, route.stuck_at, by_id, tables, plan, timing)
        if self.record_routes:
            for ev in rec.events:
                self.route_log.append(
                    (msg_id, ev.event, route.elapsed_ms + ev.time_ms, ev.vehicle_id, ev.detail)
                )
        v2v_hops = route.hops + rec.backward_hops + (rec.final.hops if rec.final else 0)
        method = _METHOD_NAMES[rec.method]
        if rec.delivered:
            e2e = route.elapsed_ms + rec.recovery_delay_ms
            outcome = "delivered"
        else:
            e2e = float("nan")
            outcome = "failed"
        self.deliveries.append(
            DeliveryRecord(msg_id, outcome, v2v_hops + rec.d2d_hops, v2v_hops, rec.d2d_hops,
                           e2e, rec.recovery_delay_ms, method, rec.oht, now)
        )


def _simulate(configs: list[ScenarioConfig], record_routes: bool, trace_path) -> list[SimResult]:
    started = time.perf_counter()
    lead = configs[0]
    world = _World(lead, trace=bool(trace_path))
    relayers = [_Relayer(c, record_routes) for c in configs]
    if lead.failure_distance_m is not None:
        # the first snapshot must admit the void, later ones are best effort
        inject_dead_end(world.fleet.states(), lead.failure_distance_m, world.target_pos, lead.dead_end_gap_m)

    q = EventQueue()
    q.push(lead.sim_duration_s, EventKind.END_OF_RUN)
    if lead.failure_distance_m is not None:
        q.push(0.0, EventKind.INJECT_FAILURE)
    if lead.sim_duration_s > 0:
        q.push(0.0, EventKind.EMIT_ALERT, 0)
    if MOBILITY_DT_S <= lead.sim_duration_s:
        q.push(MOBILITY_DT_S, EventKind.MOBILITY_TICK, 1)
    # END_OF_RUN was queued first, so it wins any tie at the final instant
    event_times = []
    while q:
        ev = q.pop()
        event_times.append(ev.time_s)
        if ev.kind is EventKind.END_OF_RUN:
            break
        if ev.kind is EventKind.MOBILITY_TICK:
            world.tick(ev.time_s)
            nxt = (ev.payload + 1) * MOBILITY_DT_S
            if nxt <= lead.sim_duration_s:
                q.push(nxt, EventKind.MOBILITY_TICK, ev.payload + 1)
        elif ev.kind is EventKind.EMIT_ALERT:
            q.push(ev.time_s, EventKind.RELAY_EPISODE, ev.payload)
            nxt = (ev.payload + 1) * lead.packet_interval_s
            if nxt < lead.sim_duration_s:
                q.push(nxt, EventKind.EMIT_ALERT, ev.payload + 1)
        elif ev.kind is EventKind.RELAY_EPISODE:
            snap = world.snapshot(ev.time_s)
            for r in relayers:
                r.relay(ev.payload, snap)
        elif ev.kind is EventKind.INJECT_FAILURE:
            world.failure_active = True

    if trace_path:
        write_trace(world.trace_rows, trace_path)
    wall = (time.perf_counter() - started) / len(configs)
    return [
        SimResult(r.cfg, r.deliveries, trace_path, wall, r.route_log, event_times)
        for r in relayers
    ]


def iter_mobility(config: ScenarioConfig):
    """Yield ``(time_s, fleet)`` after placement and after every tick of the
    run ``config`` describes.  The fleet is live: copy arrays to keep them."""
    check(config)
    world = _World(config, trace=False)
    yield 0.0, world.fleet
    k = 1
    while k * MOBILITY_DT_S < config.sim_duration_s:
        world.tick(k * MOBILITY_DT_S)
        yield k * MOBILITY_DT_S, world.fleet
        k += 1


def run(
    config: ScenarioConfig,
    *,
    record_routes: bool = False,
    trace_path: str | None = None,
) -> SimResult:
    """Simulate one scenario end to end."""
    check(config)
    return _simulate([config], record_routes, trace_path)[0]


def run_many(configs: Sequence[ScenarioConfig], *, record_routes: bool = False) -> list[SimResult]:
    """Simulate several scenarios, in input order.

    Configurations that agree on everything that moves vehicles (seed,
    density, road, speeds, schedule, void, source) share one mobility trace
    and one snapshot per alert, so each result equals its own :func:`run`.
    """
    configs = list(configs)
    for c in configs:
        check(c)
    groups: dict[tuple, list[int]] = {}
    for k, c in enumerate(configs):
        groups.setdefault(_mobility_key(c), []).append(k)
    out: list[SimResult | None] = [None] * len(configs)
    for idx in groups.values():
        for k, res in zip(idx, _simulate([configs[k] for k in idx], record_routes, None)):
            out[k] = res
    return out
