"""
Monte Carlo driver: drops of fixed user positions, each simulated over many
fading slots with the JSMP scheduler.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import calibrate, place_users, sample_fading_block, sample_large_scale
from .config import SimConfig
from .power import PairContext, power_levels
from .scheduler import (MODE_CODES, FairnessState, JsmpConfig, PowerLimits,
                        build_directional_utilities, evaluate_slots, run_core)

__all__ = ["Metrics", "drop_seed", "run_drop", "run_experiment", "gain_vs_baseline",
           "sample_pair_contexts", "binary_vs_exhaustive_cdf", "jsmp_config"]

_CHUNK = 500


@dataclass
class Metrics:
    """Per-drop or aggregated results. Rates are bps/Hz, throughput bps."""

    mean_cell_throughput_bps: float
    mean_r_ul: float
    mean_r_dl: float
    gamma: float
    mean_utility: float
    airtime_ul: np.ndarray
    airtime_dl: np.ndarray
    pick_share_ul: np.ndarray
    pick_share_dl: np.ndarray
    mode_histogram: dict
    slots: int
    drops: int = 1
    stderr: dict = field(default_factory=dict)
    per_drop: list = field(default_factory=list)

    def to_dict(self, per_drop: bool = True) -> dict:
        d = {
            "mean_cell_throughput_bps": self.mean_cell_throughput_bps,
            "mean_r_ul": self.mean_r_ul,
            "mean_r_dl": self.mean_r_dl,
            "gamma": self.gamma,
            "mean_utility": self.mean_utility,
            "airtime_ul": self.airtime_ul.tolist(),
            "airtime_dl": self.airtime_dl.tolist(),
            "pick_share_ul": self.pick_share_ul.tolist(),
            "pick_share_dl": self.pick_share_dl.tolist(),
            "mode_histogram": dict(self.mode_histogram),
            "slots": self.slots,
            "drops": self.drops,
            "stderr": dict(self.stderr),
        }
        if per_drop and self.per_drop:
            d["per_drop"] = [m.to_dict(per_drop=False) for m in self.per_drop]
        return d


def _gamma(r_dl, r_ul):
    return r_dl / r_ul if r_ul > 0 else math.nan


def jsmp_config(config: SimConfig) -> JsmpConfig:
    return JsmpConfig(rho=config.rho, rate_model=config.rate(), modes=config.modes,
                      strategy=config.strategy, candidate_set=config.candidate_set,
                      levels=config.levels, step_size=config.step_size,
                      deficit_bound=config.deficit_bound)


def drop_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed of drop ``index``; same as ``SeedSequence(master).spawn(n)[index]``."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def run_drop(config: SimConfig, seed, return_state: bool = False):
    """Simulate one drop.

    Draw order from the drop's generator: hotspots and users, shadowing, then
    fading slot by slot. Scheduling does not consume randomness, so drops
    with the same seed see the same channels under every scenario.
    """
    rng = np.random.default_rng(seed)
    layout = place_users(config.geometry(), config.n_users, config.n_hotspots, rng)
    ls = sample_large_scale(layout, config.channel_params(), rng)
    p_max_u, p_max_d, n_u, n_d = calibrate(config)
    limits = PowerLimits(p_max_u, p_max_d)
    cfg = jsmp_config(config)
    w = config.weights()
    k = config.n_users
    state = FairnessState(k)

    # per-slot values are summed once at the end so results do not depend on _CHUNK
    per_ul, per_dl, per_u = [], [], []
    hist = np.zeros(len(MODE_CODES), dtype=np.int64)
    remaining = config.slots_per_drop
    while remaining > 0:
        n = min(_CHUNK, remaining)
        remaining -= n
        fb = sample_fading_block(ls, n, rng)
        table = evaluate_slots(fb.g, fb.h, config.psi, n_u, n_d, limits, cfg)
        du = build_directional_utilities(table.q)
        qrows, partners = du.stacked()
        picks = run_core(qrows, partners, w, state, cfg.step_size, cfg.deficit_bound)
        partner = partners[np.arange(n), picks]
        ul_side = picks < k
        i = np.where(ul_side, picks + 1, partner)
        j = np.where(ul_side, partner, picks - k + 1)
        s = np.arange(n)
        per_ul.append(table.r_ul[s, i, j])
        per_dl.append(table.r_dl[s, i, j])
        per_u.append(table.q[s, i, j])
        hist += np.bincount(table.mode[s, i, j], minlength=len(MODE_CODES))

    S = config.slots_per_drop
    m_ul = float(np.concatenate(per_ul).sum()) / S
    m_dl = float(np.concatenate(per_dl).sum()) / S
    sum_u = float(np.concatenate(per_u).sum())
    a = state.active / S
    p = state.picks / S
    metrics = Metrics(
        mean_cell_throughput_bps=(m_ul + m_dl) * config.bandwidth_hz,
        mean_r_ul=m_ul, mean_r_dl=m_dl, gamma=_gamma(m_dl, m_ul), mean_utility=sum_u / S,
        airtime_ul=a[:k], airtime_dl=a[k:], pick_share_ul=p[:k], pick_share_dl=p[k:],
        mode_histogram={m.value: int(c) for m, c in zip(MODE_CODES, hist)}, slots=S)
    if return_state:
        return metrics, state, layout
    return metrics


def _run_one(args):
    config, index = args
    return run_drop(config, drop_seed(config.seed, index))


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), math.nan
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def run_experiment(config: SimConfig, workers: int = 1) -> Metrics:
    """Average :func:`run_drop` over ``config.drops`` drops.

    Drop ``d`` uses :func:`drop_seed` ``(config.seed, d)``, so results do not
    depend on ``workers``; the reduction runs in drop order.
    """
    jobs = [(config, d) for d in range(config.drops)]
    if workers > 1 and config.drops > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            drops = list(pool.map(_run_one, jobs))
    else:
        drops = [_run_one(j) for j in jobs]
    return aggregate(drops)


def aggregate(drops: list) -> Metrics:
    if len(drops) == 1:
        m = drops[0]
        return Metrics(**{**m.__dict__, "stderr": {}, "per_drop": [m]})
    stderr = {}
    means = {}
    for key in ("mean_cell_throughput_bps", "mean_r_ul", "mean_r_dl", "mean_utility"):
        means[key], stderr[key] = _mean_se([getattr(m, key) for m in drops])
    hist = {}
    for m in drops:
        for key, c in m.mode_histogram.items():
            hist[key] = hist.get(key, 0) + c
    stack = lambda attr: np.mean([getattr(m, attr) for m in drops], axis=0)  # noqa: E731
    return Metrics(
        gamma=_gamma(means["mean_r_dl"], means["mean_r_ul"]),
        airtime_ul=stack("airtime_ul"), airtime_dl=stack("airtime_dl"),
        pick_share_ul=stack("pick_share_ul"), pick_share_dl=stack("pick_share_dl"),
        mode_histogram=hist, slots=sum(m.slots for m in drops), drops=len(drops),
        stderr=stderr, per_drop=list(drops), **means)


def gain_vs_baseline(metrics: Metrics, baseline: Metrics) -> float:
    """Percentage cell-throughput gain over ``baseline``."""
    base = baseline.mean_cell_throughput_bps
    if not base > 0:
        raise ValueError("baseline throughput must be positive")
    return 100.0 * (metrics.mean_cell_throughput_bps - base) / base


def sample_pair_contexts(config: SimConfig, n: int, seed=0, rho=None) -> PairContext:
    """``n`` random UL/DL pairs drawn from the channel model, as one batch context.

    Each pair gets its own drop (user placement per ``config``), one fading
    slot and a random ordered pair ``i != j``. ``rho`` defaults to
    ``config.rho``; pass an array to vary it per pair.
    """
    if config.n_users < 2:
        raise ValueError("need at least two users to form a pair")
    rng = np.random.default_rng(seed)
    geom, params = config.geometry(), config.channel_params()
    p_max_u, p_max_d, n_u, n_d = calibrate(config)
    g_i, g_j, h_ij = np.empty(n), np.empty(n), np.empty(n)
    for t in range(n):
        layout = place_users(geom, config.n_users, config.n_hotspots, rng)
        ls = sample_large_scale(layout, params, rng)
        fb = sample_fading_block(ls, 1, rng)
        i, j = rng.choice(config.n_users, size=2, replace=False)
        g_i[t], g_j[t], h_ij[t] = fb.g[0, i], fb.g[0, j], fb.h[0, i, j]
    return PairContext(g_i, g_j, h_ij, config.psi, n_u, n_d, p_max_u, p_max_d,
                       config.rho if rho is None else rho)


def binary_vs_exhaustive_cdf(config: SimConfig, samples: int, seed=0, levels: int = 101):
    """Paired FD utilities of the on/off strategy and a ``levels``-point grid.

    Follows the setup of the on/off experiment: uniform users, ``rho = 0.5``
    and 100 dB self-interference cancellation, with ``config``'s rate model.
    Returns ``(binary, exhaustive)`` arrays of length ``samples``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    cfg = config.replace(rho=0.5, si_cancellation_db=100.0, n_hotspots=0)
    ctx = sample_pair_contexts(cfg, samples, seed)
    model = cfg.rate()
    binary = _grid_max(ctx, model, 2)
    exhaustive = _grid_max(ctx, model, levels)
    return binary, exhaustive


def _grid_max(ctx: PairContext, model, levels: int, chunk: int = 200) -> np.ndarray:
    from .power import fd_utility
    fr = power_levels(1.0, levels)
    fu, fd = np.meshgrid(fr, fr, indexing="ij")
    fu, fd = fu.ravel()[:, None], fd.ravel()[:, None]
    n = len(np.atleast_1d(ctx.g_i))
    out = np.empty(n)
    for s in range(0, n, chunk):
        sl = slice(s, s + chunk)
        sub = PairContext(*(np.atleast_1d(np.asarray(getattr(ctx, f)))[sl]
                            if np.ndim(getattr(ctx, f)) else getattr(ctx, f)
                            for f in ctx.__dataclass_fields__))
        u = fd_utility(sub, fu * sub.p_max_u, fd * sub.p_max_d, model)
        out[sl] = np.max(u, axis=0)
    return out

