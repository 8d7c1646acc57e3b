"""Compare how each recovery strategy copes with the same 4 km void.

Runs the failure scenarios for one seed and prints how many alerts each
strategy delivered and what the recovery cost on average.

    python3 demos/dead_end_recovery.py [seed]
"""

import sys
from dataclasses import replace

from hybridv2v import BUILTIN_SCENARIOS, run_many
from hybridv2v.metrics import oht_summary, run_metrics

NAMES = ["proactive_1500", "proactive_1000", "proactive_500", "ondemand_1500", "ondemand_1000", "ondemand_500"]


def main(seed: int = 1) -> None:
    configs = [replace(BUILTIN_SCENARIOS[n], seed=seed) for n in NAMES]
    print(f"{'scenario':<16}{'delivered':>10}{'recovery ms':>13}{'T_D':>6}{'2*T_HO':>8}{'rest ms':>9}")
    for name, res in zip(NAMES, run_many(configs)):
        m = run_metrics(res)
        oht = oht_summary(res)
        parts = (oht.t_discovery_ms, oht.t_handover_total_ms, oht.t_v2v_rest_ms) if oht else (0, 0, 0)
        print(
            f"{name:<16}{m['delivery_ratio']:>10.3f}{m['recovery_delay_ms']:>13.1f}"
            f"{parts[0]:>6g}{parts[1]:>8g}{parts[2]:>9.1f}"
        )


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 1)
