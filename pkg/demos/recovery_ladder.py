"""Recovery delay of the D2D modes and of backward recovery at one void.

The alert source sits just behind a 1.5 km void.  A proactive D2D bridge
costs only its relay hop plus the remaining V2V leg, discovery adds to it,
and backward recovery pays per hop to reach an RSU behind the source.

    python3 demos/recovery_ladder.py [seeds]
"""

import sys
from dataclasses import replace

from hybridv2v import run_many, scenario_variants
from hybridv2v.metrics import run_metrics


def main(seeds: int = 3) -> None:
    variants = scenario_variants("fig7_recovery_ladder")
    configs = [replace(c, seed=s) for _, c in variants for s in range(1, seeds + 1)]
    results = run_many(configs)
    for j, (label, _) in enumerate(variants):
        chunk = results[j * seeds : (j + 1) * seeds]
        delays = [run_metrics(r)["recovery_delay_ms"] for r in chunk]
        mean = sum(delays) / len(delays)
        print(f"{label:<20} {mean:8.1f} ms  " + "#" * int(mean / 20))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
