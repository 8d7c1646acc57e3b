"""Single-lane highway mobility with the Intelligent Driver Model.

The road is a ring of length ``road_length_m``: a vehicle leaving at the far
end re-enters at 0 with a freshly drawn desired speed, so density stays
constant over long runs.  The front-most vehicle follows the rear-most one
across the seam.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class VehicleState:
    id: int
    position_m: float
    velocity_ms: float
    desired_speed_ms: float
    d2d_enabled: bool = True


@dataclass(frozen=True)
class IdmParams:
    max_accel_ms2: float = 1.4
    comfortable_decel_ms2: float = 2.0
    min_gap_m: float = 2.0
    headway_s: float = 1.5
    delta_exponent: float = 4.0


class InfeasiblePacking(ValueError):
    pass


def kmh_to_ms(v: float) -> float:
    return v / 3.6


def place_vehicles(
    count: int,
    road_length_m: float,
    rng: np.random.Generator,
    speed_range_kmh: tuple[float, float] = (30.0, 100.0),
    params: IdmParams = IdmParams(),
) -> list[VehicleState]:
    """Uniform positions with every gap (including the ring seam) at least
    ``params.min_gap_m``; vehicles start at their desired speed."""
    if count < 1 or road_length_m <= 0:
        raise ValueError("need count >= 1 and road_length_m > 0")
    slack = road_length_m - count * params.min_gap_m
    if slack < 0:
        raise InfeasiblePacking(
            f"cannot fit {count} vehicles with {params.min_gap_m} m gaps on {road_length_m} m"
        )
    # n sorted uniforms on the shrunken road, then re-insert the minimum gaps
    base = np.sort(rng.uniform(0.0, slack, size=count))
    positions = base + params.min_gap_m * np.arange(count)
    lo, hi = (kmh_to_ms(v) for v in speed_range_kmh)
    desired = rng.uniform(lo, hi, size=count)
    return [
        VehicleState(i, float(x), float(v), float(v)) for i, (x, v) in enumerate(zip(positions, desired))
    ]


def idm_acceleration(
    vehicle: VehicleState, leader: VehicleState | None, p: IdmParams = IdmParams()
) -> float:
    """IDM acceleration of ``vehicle`` behind ``leader`` (None = free road)."""
    v, v0 = vehicle.velocity_ms, vehicle.desired_speed_ms
    free = 1.0 - (v / v0) ** p.delta_exponent
    if leader is None:
        return p.max_accel_ms2 * free
    gap = leader.position_m - vehicle.position_m
    if gap <= 0:
        return -p.comfortable_decel_ms2 * 5.0
    dv = v - leader.velocity_ms
    s_star = p.min_gap_m + v * p.headway_s + v * dv / (2.0 * math.sqrt(p.max_accel_ms2 * p.comfortable_decel_ms2))
    return p.max_accel_ms2 * (free - (s_star / gap) ** 2)


def idm_acceleration_array(
    x: np.ndarray, v: np.ndarray, v0: np.ndarray, road_length_m: float, p: IdmParams
) -> np.ndarray:
    """Vectorised IDM for positions sorted ascending on the ring."""
    n = x.size
    free = 1.0 - (v / v0) ** p.delta_exponent
    if n < 2:
        return p.max_accel_ms2 * free
    gap = np.empty(n)
    gap[:-1] = x[1:] - x[:-1]
    gap[-1] = (x[0] + road_length_m) - x[-1]
    dv = np.empty(n)
    dv[:-1] = v[:-1] - v[1:]
    dv[-1] = v[-1] - v[0]
    s_star = p.min_gap_m + v * p.headway_s + v * dv / (2.0 * math.sqrt(p.max_accel_ms2 * p.comfortable_decel_ms2))
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = p.max_accel_ms2 * (free - (s_star / gap) ** 2)
    return np.where(gap > 0, acc, -p.comfortable_decel_ms2 * 5.0)


class Fleet:
    """Array form of the world used by the simulation loop.

    Arrays are kept sorted by position; ``ids`` follow the permutation.
    """

    def __init__(self, vehicles: Sequence[VehicleState]):
        order = sorted(vehicles, key=lambda s: (s.position_m, s.id))
        self.ids = np.array([s.id for s in order], dtype=np.int64)
        self.x = np.array([s.position_m for s in order], dtype=float)
        self.v = np.array([s.velocity_ms for s in order], dtype=float)
        self.v0 = np.array([s.desired_speed_ms for s in order], dtype=float)
        self.d2d = np.array([s.d2d_enabled for s in order], dtype=bool)

    def __len__(self):
        return self.ids.size

    def states(self) -> list[VehicleState]:
        cols = (self.ids.tolist(), self.x.tolist(), self.v.tolist(), self.v0.tolist(), self.d2d.tolist())
        return list(map(VehicleState, *cols))

    def step(
        self,
        p: IdmParams,
        dt_s: float,
        road_length_m: float,
        rng: np.random.Generator | None = None,
        speed_range_ms: tuple[float, float] | None = None,
    ) -> None:
        if len(self) == 0:
            return
        acc = idm_acceleration_array(self.x, self.v, self.v0, road_length_m, p)
        # semi-implicit Euler: velocity first, then position with the new velocity
        self.v = np.maximum(self.v + acc * dt_s, 0.0)
        self.x = self.x + self.v * dt_s
        wrapped = self.x >= road_length_m
        if wrapped.any():
            self.x[wrapped] -= road_length_m
            if rng is not None and speed_range_ms is not None:
                lo, hi = speed_range_ms
                self.v0[wrapped] = rng.uniform(lo, hi, size=int(wrapped.sum()))
                # a slower new desired speed takes effect at once
                self.v[wrapped] = np.minimum(self.v[wrapped], self.v0[wrapped])
            order = np.argsort(self.x, kind="stable")
            for name in ("ids", "x", "v", "v0", "d2d"):
                setattr(self, name, getattr(self, name)[order])


def step_mobility(
    world: Sequence[VehicleState],
    p: IdmParams = IdmParams(),
    dt_s: float = 0.5,
    road_length_m: float = math.inf,
    rng: np.random.Generator | None = None,
    speed_range_ms: tuple[float, float] | None = None,
) -> list[VehicleState]:
    """Advance the world by one tick and return the new sorted states.

    With the default infinite road there is no ring: the front vehicle drives
    on a free road.
    """
    if not 0 < dt_s <= 1:
        raise ValueError("dt_s must lie in (0, 1]")
    if not world:
        return []
    fleet = Fleet(world)
    if math.isinf(road_length_m):
        acc = idm_acceleration_array(fleet.x, fleet.v, fleet.v0, 0.0, p)
        acc[-1] = idm_acceleration(
            VehicleState(0, fleet.x[-1], fleet.v[-1], fleet.v0[-1]), None, p
        )
        fleet.v = np.maximum(fleet.v + acc * dt_s, 0.0)
        fleet.x = fleet.x + fleet.v * dt_s
    else:
        fleet.step(p, dt_s, road_length_m, rng, speed_range_ms)
    return fleet.states()


def collisions(positions: np.ndarray, road_length_m: float) -> int:
    """Count non-positive gaps between ring neighbours."""
    x = np.sort(np.asarray(positions, dtype=float))
    if x.size < 2:
        return 0
    gaps = np.diff(np.append(x, x[0] + road_length_m))
    return int(np.count_nonzero(gaps <= 0))


def write_trace(rows, path) -> None:
    """Dump ``(time_s, vehicle_id, position_m, velocity_ms)`` rows as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "vehicle_id", "position_m", "velocity_ms"])
        for t, vid, x, v in rows:
            w.writerow([repr(float(t)), int(vid), repr(float(x)), repr(float(v))])


__all__ = [
    "VehicleState",
    "IdmParams",
    "InfeasiblePacking",
    "Fleet",
    "place_vehicles",
    "idm_acceleration",
    "idm_acceleration_array",
    "step_mobility",
    "collisions",
    "write_trace",
]
