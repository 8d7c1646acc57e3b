"""Hop count and end-to-end delay against vehicle density on a 2 km road.

Longer radios need fewer hops; contention makes every curve grow with
density.  Writes the two sweep tables as CSV under ``demo_out/``.

    python3 demos/density_sweep.py [seeds]
"""

import sys
from dataclasses import replace
from pathlib import Path

from hybridv2v import run_many, scenario_variants
from hybridv2v.metrics import aggregate, combine, write_csv

DENSITIES = (20, 40, 60, 80, 100)


def sweep(family: str, seeds: int):
    variants = scenario_variants(family)
    configs = [replace(c.with_values(vehicle_count=n), seed=s) for _, c in variants for n in DENSITIES for s in range(1, seeds + 1)]
    results = run_many(configs)
    per = len(DENSITIES) * seeds
    return combine(
        aggregate(results[j * per : (j + 1) * per], "vehicle_count", label) for j, (label, _) in enumerate(variants)
    )


def main(seeds: int = 3) -> None:
    out = Path("demo_out")
    out.mkdir(exist_ok=True)
    for family, metric in (("fig4_hops_sweep", "hops"), ("fig5_delay_sweep", "e2e_delay_ms")):
        table = sweep(family, seeds).only(metric)
        write_csv(table, out / f"{family}.csv")
        print(f"\n{metric} ({seeds} seeds)")
        print("density   " + "".join(f"{n:>9}" for n in DENSITIES))
        for label in table.labels():
            cells = {r.x: r.mean for r in table.series(label, metric)}
            print(f"{label:<10}" + "".join(f"{cells.get(n, float('nan')):>9.2f}" for n in DENSITIES))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
