"""Scheduling, mode selection and power control for a full-duplex cell."""

__version__ = "0.1.0"

from .rates import (Mode, PowerPair, SinrPair, Shannon, Staircase, default_lte_table,
                    load_staircase, network_utility, rate, sinr_fd, sinr_hd, sinr_sic)
from .channel import (CellGeometry, ChannelParams, LinkGains, calibrate, pathloss_db,
                      place_users, sample_large_scale, sample_slot_gains)
from .power import (PairContext, PowerSolution, fd_candidates, fd_interior_roots,
                    grid_search, quadratic_real_roots, sic_candidates, solve_fd, solve_sic)
from .scheduler import (FairnessState, JsmpConfig, PowerLimits, VirtualUser,
                        airtime_report, build_directional_utilities, evaluate_virtual_user,
                        hd_core_pick, schedule_slot)
from .config import ConfigError, SimConfig, parse_config
from .sim import (Metrics, binary_vs_exhaustive_cdf, gain_vs_baseline, run_drop,
                  run_experiment)
