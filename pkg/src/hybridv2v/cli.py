"""Command line entry point: ``python -m hybridv2v <command>``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import BUILTIN_SCENARIOS, ConfigError, config_dict, resolve_scenario, scenario_variants
from .engine import ScenarioError, run, run_many, seed_from_env
from .metrics import (
    METRICS,
    AggregationError,
    SweepTable,
    aggregate,
    combine,
    summarize,
    summary_text,
    write_csv,
    write_deliveries_csv,
    write_routes_csv,
)

DESCRIPTIONS = {
    "table1_default": "2 km road, 60 vehicles, plain V2V with V2V-RA recovery",
    "proactive_1500": "void 4 km before the RSU, proactive D2D, 1.5 km D2D range",
    "proactive_1000": "void 4 km before the RSU, proactive D2D, 1 km D2D range",
    "proactive_500": "void 4 km before the RSU, proactive D2D, 0.5 km D2D range",
    "ondemand_1500": "void 4 km before the RSU, on-demand D2D, 1.5 km D2D range",
    "ondemand_1000": "void 4 km before the RSU, on-demand D2D, 1 km D2D range",
    "ondemand_500": "void 4 km before the RSU, on-demand D2D, 0.5 km D2D range",
    "v2vra_best": "void before the RSU, V2V-RA at 50 ms per backward hop",
    "v2vra_worst": "void before the RSU, V2V-RA at 200 ms per backward hop",
    "fig4_hops_sweep": "hop count vs density: gpsr_250, gpsr_350, d2d_550",
    "fig5_delay_sweep": "E2E delay vs density with contention: gpsr_250, gpsr_350, d2d_550",
    "fig7_recovery_ladder": "recovery delay of D2D and V2V-RA variants at one void",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridv2v", description="Highway alert relaying simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--scenario", required=True, help="built-in name or scenario file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="results")
    p.add_argument("--trace", action="store_true", help="also dump the mobility trace")

    p = sub.add_parser("sweep", help="vary one field over values and seeds")
    p.add_argument("--scenario", required=True)
    p.add_argument("--vary", required=True, help="configuration field, e.g. vehicle_count")
    p.add_argument("--values", required=True, help="comma separated values")
    p.add_argument("--seeds", type=int, default=10, help="seeds per value (base seed + k)")
    p.add_argument("--out", default="results")

    p = sub.add_parser("compare", help="compare scenarios on one metric")
    p.add_argument("--scenarios", required=True, help="comma separated names or files")
    p.add_argument("--metric", required=True, choices=METRICS)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", default="results")

    sub.add_parser("list", help="list built-in scenarios")
    return parser


class _UsageError(Exception):
    pass


def _scenario_name(arg: str) -> str:
    return arg if arg in BUILTIN_SCENARIOS else Path(arg).stem


def _resolve(arg: str):
    try:
        return resolve_scenario(arg)
    except ConfigError as exc:
        raise _UsageError(str(exc)) from None


def _write_tables(table: SweepTable, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for metric in METRICS:
        write_csv(table.only(metric), outdir / f"{metric}.csv")


def cmd_run(args) -> int:
    base = seed_from_env(_resolve(args.scenario))
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    name = _scenario_name(args.scenario)
    outdir = Path(args.out) / name
    outdir.mkdir(parents=True, exist_ok=True)
    variants = scenario_variants(name, base)
    single = len(variants) == 1
    if single:
        trace = str(outdir / "trace.csv") if args.trace else None
        results = [run(base, record_routes=True, trace_path=trace)]
    else:
        results = run_many([c for _, c in variants], record_routes=True)
    tables, texts = [], []
    for (label, _), res in zip(variants, results):
        tables.append(aggregate([res], "seed", label))
        suffix = "" if single else f"_{label}"
        write_deliveries_csv(res, outdir / f"deliveries{suffix}.csv")
        write_routes_csv(res, outdir / f"routes{suffix}.csv")
        texts.append(summary_text(label, res))
    _write_tables(combine(tables), outdir)
    text = "\n".join(texts)
    (outdir / "summary.txt").write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)
    return 0


def _parse_values(field: str, raw: str, base) -> list:
    fields = config_dict(base)
    if field not in fields or field in ("d2d_mode", "rsu_positions_m", "timing"):
        raise _UsageError(f"cannot vary {field!r}")
    kind = int if field in ("vehicle_count", "seed") else float
    try:
        return [kind(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"bad value list for {field}: {raw!r}") from None


def cmd_sweep(args) -> int:
    base = seed_from_env(_resolve(args.scenario))
    name = _scenario_name(args.scenario)
    values = _parse_values(args.vary, args.values, base)
    if args.seeds < 1:
        raise _UsageError("--seeds must be at least 1")
    variants = scenario_variants(name, base)
    configs, labels = [], []
    for label, cfg in variants:
        for x in values:
            for k in range(args.seeds):
                c = cfg.with_values(**{args.vary: x})
                configs.append(replace(c, seed=c.seed + k) if args.vary != "seed" else c)
                labels.append(label)
    results = run_many(configs)
    tables = []
    for label, _ in variants:
        tables.append(aggregate([r for r, l in zip(results, labels) if l == label], args.vary, label))
    table = combine(tables)
    outdir = Path(args.out) / name
    _write_tables(table, outdir)
    lines = [f"sweep {name} over {args.vary} with {args.seeds} seed(s)"]
    for metric in METRICS:
        lines.append(f"\n{metric}")
        for label in table.labels():
            row = "  ".join(f"{r.x:g}:{r.mean:.3f}" for r in table.series(label, metric))
            lines.append(f"  {label:<20} {row}")
    text = "\n".join(lines) + "\n"
    (outdir / "summary.txt").write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    names = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    if not names:
        raise _UsageError("no scenarios given")
    if args.seeds < 1:
        raise _UsageError("--seeds must be at least 1")
    rows = []
    for idx, arg in enumerate(names):
        base = seed_from_env(_resolve(arg))
        name = _scenario_name(arg)
        variants = scenario_variants(name, base)
        configs = [replace(c, seed=c.seed + k) for _, c in variants for k in range(args.seeds)]
        results = run_many(configs)
        for j, (label, _) in enumerate(variants):
            chunk = results[j * args.seeds : (j + 1) * args.seeds]
            full = label if len(variants) == 1 else f"{name}:{label}"
            rows.extend(summarize(chunk, full, x=float(idx)).rows)
    table = SweepTable("scenario", rows)
    outdir = Path(args.out) / "compare"
    _write_tables(table, outdir)
    lines = [f"{args.metric} over {args.seeds} seed(s)"]
    for r in sorted(table.only(args.metric).rows, key=lambda r: (r.x, r.label)):
        lines.append(f"  {r.label:<40} mean {r.mean:10.3f}  stddev {r.stddev:8.3f}  n {r.n}")
    text = "\n".join(lines) + "\n"
    (outdir / "summary.txt").write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)
    return 0


def cmd_list(args) -> int:
    for name in BUILTIN_SCENARIOS:
        print(f"{name:<22} {DESCRIPTIONS.get(name, '')}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare, "list": cmd_list}[args.command]
    try:
        return handler(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hybridv2v: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ScenarioError, AggregationError) as exc:
        print(f"hybridv2v: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
