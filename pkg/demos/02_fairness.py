"""
Temporal fairness of the scheduler.

Runs one drop of 20000 slots per scenario and prints, for each directional
user, how often it was picked directly and how often it was active at all
(directly or as the partner of a full-duplex pair).
"""

import numpy as np

from fdcell import SimConfig
from fdcell.sim import drop_seed, run_drop


def main():
    for scenario in ("HD", "HD+FD", "HD+FD+SIC"):
        cfg = SimConfig(scenario=scenario, slots_per_drop=20_000, n_hotspots=1)
        m, state, _ = run_drop(cfg, drop_seed(0, 0), return_state=True)
        w = cfg.weights()
        pick = state.picks / state.slot_count
        act = state.active / state.slot_count
        print(f"{scenario}: weight {w[0]:.4f}, sum of activations {act.sum():.3f}")
        print("  pick share  ", np.array2string(pick, precision=3))
        print("  activation  ", np.array2string(act, precision=3))
        print("  modes       ", m.mode_histogram)


if __name__ == "__main__":
    main()
