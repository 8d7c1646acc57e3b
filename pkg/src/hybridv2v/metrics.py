"""Per-message records, seed/density aggregation and CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .config import config_dict
from .d2d import OhtBreakdown

if TYPE_CHECKING:
    from .engine import SimResult

METRICS = ("hops", "e2e_delay_ms", "recovery_delay_ms", "delivery_ratio")
RECOVERY_METHODS = ("none", "redirect_neighbor", "alternate_rsu", "d2d_fallback", "exhausted")


class AggregationError(ValueError):
    pass


@dataclass(frozen=True)
class DeliveryRecord:
    msg_id: int
    outcome: str  # "delivered" | "failed"
    total_hops: int
    v2v_hops: int
    d2d_hops: int
    e2e_delay_ms: float
    recovery_delay_ms: float
    recovery_method: str = "none"
    oht: OhtBreakdown | None = None
    created_s: float = 0.0

    @property
    def delivered(self) -> bool:
        return self.outcome == "delivered"


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def run_metrics(result: "SimResult") -> dict[str, float]:
    """Scalar outcome of one run; NaN where a metric has no sample."""
    recs = result.deliveries
    ok = [r for r in recs if r.delivered]
    recovered = [r for r in ok if r.recovery_method != "none"]
    return {
        "hops": _mean([r.total_hops for r in ok]),
        "e2e_delay_ms": _mean([r.e2e_delay_ms for r in ok]),
        "recovery_delay_ms": _mean([r.recovery_delay_ms for r in recovered]),
        "delivery_ratio": len(ok) / len(recs) if recs else math.nan,
    }


@dataclass(frozen=True)
class SweepRow:
    label: str
    x: float
    metric: str
    mean: float
    stddev: float
    n: int


@dataclass
class SweepTable:
    variable: str
    rows: list[SweepRow] = field(default_factory=list)

    def series(self, label: str, metric: str) -> list[SweepRow]:
        return sorted(
            (r for r in self.rows if r.label == label and r.metric == metric), key=lambda r: r.x
        )

    def labels(self) -> list[str]:
        return sorted({r.label for r in self.rows})

    def only(self, metric: str) -> "SweepTable":
        return SweepTable(self.variable, [r for r in self.rows if r.metric == metric])


def _stats(values: list[float]) -> tuple[float, float]:
    # fsum keeps the result independent of input order
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate(results: Iterable["SimResult"], group_by: str, label: str = "run") -> SweepTable:
    """Mean and sample standard deviation over seeds of every run metric,
    one group per value of ``group_by``."""
    results = list(results)
    if results:
        ref = config_dict(results[0].config_echo)
        if group_by not in ref:
            raise AggregationError(f"unknown grouping variable {group_by!r}")
        for res in results[1:]:
            other = config_dict(res.config_echo)
            for key, value in ref.items():
                if key not in (group_by, "seed") and other[key] != value:
                    raise AggregationError(f"configs differ in {key!r}: {value!r} vs {other[key]!r}")
    groups: dict[float, list[dict[str, float]]] = {}
    for res in results:
        x = config_dict(res.config_echo)[group_by]
        groups.setdefault(x, []).append(run_metrics(res))
    rows = []
    for x, runs in groups.items():
        for metric in METRICS:
            values = [m[metric] for m in runs if not math.isnan(m[metric])]
            if values:
                mean, sd = _stats(values)
                rows.append(SweepRow(label, x, metric, mean, sd, len(values)))
    rows.sort(key=lambda r: (r.label, r.x, r.metric))
    return SweepTable(group_by, rows)


def summarize(results: Iterable["SimResult"], label: str, x: float = 0.0) -> SweepTable:
    """Mean and sample standard deviation over seeds at a single point."""
    runs = [run_metrics(r) for r in results]
    rows = []
    for metric in METRICS:
        values = [m[metric] for m in runs if not math.isnan(m[metric])]
        if values:
            mean, sd = _stats(values)
            rows.append(SweepRow(label, x, metric, mean, sd, len(values)))
    return SweepTable("", rows)


def combine(tables: Iterable[SweepTable]) -> SweepTable:
    tables = list(tables)
    variables = {t.variable for t in tables}
    if len(variables) > 1:
        raise AggregationError(f"cannot combine sweeps over {sorted(variables)}")
    rows = sorted((r for t in tables for r in t.rows), key=lambda r: (r.label, r.x, r.metric))
    return SweepTable(variables.pop() if variables else "", rows)


def _fmt(v) -> str:
    if isinstance(v, float):
        if v.is_integer():
            return str(int(v))
        return repr(v)
    return str(v)


def write_csv(table: SweepTable, path) -> None:
    rows = sorted(table.rows, key=lambda r: (r.label, r.x, r.metric))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "label", "metric", "mean", "stddev", "n"])
        for r in rows:
            w.writerow([_fmt(r.x), r.label, r.metric, repr(float(r.mean)), repr(float(r.stddev)), r.n])


DELIVERY_COLUMNS = [
    "msg_id", "created_s", "outcome", "total_hops", "v2v_hops", "d2d_hops",
    "e2e_delay_ms", "recovery_delay_ms", "recovery_method",
    "oht_discovery_ms", "oht_handover_total_ms", "oht_v2v_rest_ms", "oht_total_ms",
]


def write_deliveries_csv(result: "SimResult", path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DELIVERY_COLUMNS)
        for r in result.deliveries:
            oht = r.oht
            oht_cols = (
                [oht.t_discovery_ms, oht.t_handover_total_ms, oht.t_v2v_rest_ms, oht.total_ms]
                if oht is not None
                else ["", "", "", ""]
            )
            w.writerow(
                [r.msg_id, repr(r.created_s), r.outcome, r.total_hops, r.v2v_hops, r.d2d_hops,
                 repr(r.e2e_delay_ms), repr(r.recovery_delay_ms), r.recovery_method]
                + [c if c == "" else repr(float(c)) for c in oht_cols]
            )


def write_routes_csv(result: "SimResult", path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["msg_id", "event", "time_ms", "vehicle_id", "detail"])
        for row in result.route_log:
            msg_id, event, time_ms, vehicle, detail = row
            w.writerow([msg_id, event, repr(float(time_ms)), vehicle, detail])


def oht_summary(result: "SimResult") -> OhtBreakdown | None:
    """Mean OHT components over delivered D2D recoveries."""
    ohts = [r.oht for r in result.deliveries if r.oht is not None and r.delivered]
    if not ohts:
        return None
    return OhtBreakdown(
        _mean([o.t_discovery_ms for o in ohts]),
        _mean([o.t_handover_total_ms for o in ohts]),
        _mean([o.t_v2v_rest_ms for o in ohts]),
        _mean([o.total_ms for o in ohts]),
    )


def summary_text(name: str, result: "SimResult") -> str:
    m = run_metrics(result)
    cfg = result.config_echo
    recs = result.deliveries
    by_method = {k: 0 for k in RECOVERY_METHODS}
    for r in recs:
        by_method[r.recovery_method] += 1
    lines = [
        f"scenario        {name}",
        f"seed            {cfg.seed}",
        f"d2d mode        {cfg.d2d_mode.value}",
        f"vehicles        {cfg.vehicle_count} on {cfg.road_length_m:g} m, v2v {cfg.v2v_range_m:g} m, d2d {cfg.d2d_range_m:g} m",
        f"alerts          {len(recs)} emitted, {sum(r.delivered for r in recs)} delivered",
        f"delivery ratio  {m['delivery_ratio']:.4f}",
        f"mean hops       {m['hops']:.3f}",
        f"mean e2e delay  {m['e2e_delay_ms']:.3f} ms",
        f"mean recovery   {m['recovery_delay_ms']:.3f} ms",
        "recoveries      " + ", ".join(f"{k}={v}" for k, v in by_method.items()),
    ]
    oht = oht_summary(result)
    if oht is not None:
        lines.append(
            f"OHT breakdown   T_D={oht.t_discovery_ms:g} ms, 2*T_HO={oht.t_handover_total_ms:g} ms, "
            f"T_V2V(rest)={oht.t_v2v_rest_ms:.3f} ms, total={oht.total_ms:.3f} ms"
        )
    return "\n".join(lines) + "\n"
