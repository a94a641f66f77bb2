"""
Power control for one UL/DL pair.

Draws a few user pairs from the indoor cell model and compares, for each,
the FD candidate search, the on/off strategy and a dense grid, then the SIC
candidate search against a line search over the DL power.
"""

import numpy as np

from fdcell import SimConfig, fd_candidates, grid_search, solve_fd, solve_sic
from fdcell.power import power_levels, sic_utility
from fdcell.rates import Shannon
from fdcell.sim import sample_pair_contexts


def main():
    cfg = SimConfig(n_hotspots=1)
    batch = sample_pair_contexts(cfg, 5, seed=1, rho=np.linspace(0.2, 0.8, 5))
    fr = power_levels(1.0, 101)
    print("pair  rho   FD cand  on/off   grid     tag            SIC cand  line")
    for k in range(5):
        ctx = batch.item(k)
        full = solve_fd(ctx, candidate_set="full")
        onoff = solve_fd(ctx, candidate_set="corners_only")
        grid = grid_search(ctx, Shannon(), fr * ctx.p_max_u, fr * ctx.p_max_d)
        sic = solve_sic(ctx)
        line = sic_utility(ctx, np.linspace(0, ctx.p_max_d, 10_000), Shannon()).max()
        print(f"{k:>4}  {ctx.rho:.2f}  {full.utility:7.3f}  {onoff.utility:7.3f}  "
              f"{grid.utility:7.3f}  {full.candidate_tag:<13}  {sic.utility:8.3f}  {line:.3f}")
    print(f"\ncandidates for the last pair: {len(fd_candidates(ctx))} FD points "
          f"(corners, edge and interior stationary points)")


if __name__ == "__main__":
    main()
