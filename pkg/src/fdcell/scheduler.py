"""
Joint user scheduling, mode selection and power optimisation (JSMP).

Every slot:

1. each virtual user ``V_ij`` (UL user ``i``, DL user ``j``, 0 = nobody) gets
   its best mode and powers,
2. its utility ``q_ij`` is recorded,
3. each directional user keeps the best ``q`` it can reach and the partner
   that achieves it,
4. a weighted temporal-fair HD scheduler picks one directional user, which
   is served together with its best partner.

Users are 1-based in :class:`VirtualUser` (0 means "no user"); arrays are
0-based with column/row 0 reserved for "no user".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import LinkGains
from .power import PairContext, solve_fd_batch, solve_sic_batch
from .rates import Mode, PowerPair, RateModel, Shannon, network_utility, sinr_fd, sinr_hd, sinr_sic

__all__ = [
    "VirtualUser", "ModeDecision", "DirectionalUtility", "FairnessState", "ScheduleOutcome",
    "PowerLimits", "JsmpConfig", "evaluate_virtual_user", "evaluate_slots", "SlotTable",
    "build_directional_utilities", "hd_core_pick", "schedule_slot", "airtime_report",
    "run_core",
]

MODE_CODES = (Mode.HD_UL, Mode.HD_DL, Mode.FD, Mode.SIC)
_CODE = {m: k for k, m in enumerate(MODE_CODES)}
_UL, _DL = "UL", "DL"
_TIE = 1e-9


class PowerLimits(NamedTuple):
    p_max_u: float
    p_max_d: float


@dataclass(frozen=True)
class VirtualUser:
    ul_index: int
    dl_index: int

    def __post_init__(self):
        if self.ul_index < 0 or self.dl_index < 0:
            raise ValueError("indices must be nonnegative")
        if self.ul_index == 0 and self.dl_index == 0:
            raise ValueError("a virtual user needs at least one real user")
        if self.ul_index == self.dl_index:
            raise ValueError("a half-duplex user cannot be in both directions")

    @property
    def two_sided(self) -> bool:
        return self.ul_index > 0 and self.dl_index > 0


@dataclass(frozen=True)
class ModeDecision:
    vu: VirtualUser
    mode: Mode
    powers: PowerPair
    utility_q: float
    rates: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class JsmpConfig:
    """Scheduler-side knobs.

    ``strategy`` is ``analytic`` (Shannon: closed-form candidates, with the
    FD candidate set chosen by ``candidate_set``), ``binary`` or ``grid``
    (``levels`` per direction). The staircase model always uses a grid.
    """

    rho: float = 0.5
    rate_model: RateModel = field(default_factory=Shannon)
    modes: frozenset = frozenset({"HD", "FD", "SIC"})
    strategy: str = "analytic"
    candidate_set: str = "corners_only"
    levels: int = 2
    step_size: float = 0.01
    deficit_bound: float = 50.0

    def __post_init__(self):
        if not self.modes:
            raise ValueError("mode set must not be empty")
        bad = set(self.modes) - {"HD", "FD", "SIC"}
        if bad:
            raise ValueError(f"unknown modes {sorted(bad)}")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")

    def fd_strategy(self) -> str:
        if self.strategy == "analytic" and self.candidate_set == "corners_only":
            return "binary"
        return self.strategy


# ---------------------------------------------------------------------------
# Steps 1-2: virtual users
# ---------------------------------------------------------------------------
def _pair_ctx(g_i, g_j, h_ij, psi, n_u, n_d, limits, rho):
    return PairContext(g_i, g_j, h_ij, psi, n_u, n_d, limits.p_max_u, limits.p_max_d, rho)


def evaluate_virtual_user(vu: VirtualUser, gains: LinkGains, limits: PowerLimits, rho: float,
                          rate_model: RateModel, mode_set, strategy: str = "analytic",
                          candidate_set: str = "corners_only", levels: int = 2) -> ModeDecision:
    """Best mode and powers for one virtual user in one slot.

    One-sided users are always HD at full power. Two-sided users choose
    between FD and SIC (whichever are in ``mode_set``); HD is never used for
    them because every HD option is already a one-sided virtual user. For
    the same reason their optimised powers must both be nonzero.
    """
    mode_set = frozenset(mode_set)
    cfg = JsmpConfig(rho=rho, rate_model=rate_model, modes=mode_set, strategy=strategy,
                     candidate_set=candidate_set, levels=levels)
    i, j = vu.ul_index, vu.dl_index
    if not vu.two_sided:
        if i:
            s = sinr_hd(_UL, gains.g[i - 1], limits.p_max_u, gains.n_u)
            r = (float(rate_model(s.ul)), 0.0)
            mode, powers = Mode.HD_UL, PowerPair(limits.p_max_u, 0.0)
        else:
            s = sinr_hd(_DL, gains.g[j - 1], limits.p_max_d, gains.n_d)
            r = (0.0, float(rate_model(s.dl)))
            mode, powers = Mode.HD_DL, PowerPair(0.0, limits.p_max_d)
        return ModeDecision(vu, mode, powers, float(network_utility(rho, *r)), r)

    ctx = _pair_ctx(gains.g[i - 1], gains.g[j - 1], gains.h[i - 1, j - 1], gains.psi,
                    gains.n_u, gains.n_d, limits, rho)
    best = None
    for mode in (Mode.FD, Mode.SIC):
        if mode.value not in mode_set:
            continue
        if mode is Mode.FD:
            p_u, p_d, u = solve_fd_batch(ctx, rate_model, cfg.fd_strategy(), levels, positive_only=True)
            s = sinr_fd(ctx.g_i, ctx.g_j, ctx.h_ij, ctx.psi, PowerPair(p_u, p_d), ctx.n_u, ctx.n_d)
        else:
            p_u, p_d, u = solve_sic_batch(ctx, rate_model, strategy, levels, positive_only=True)
            s = sinr_sic(ctx.g_i, ctx.g_j, ctx.h_ij, ctx.psi, PowerPair(p_u, p_d), ctx.n_u, ctx.n_d)
        if best is None or float(u) > best.utility_q:
            r = (float(rate_model(s.ul)), float(rate_model(s.dl)))
            best = ModeDecision(vu, mode, PowerPair(float(p_u), float(p_d)), float(u), r)
    if best is None:
        # only HD allowed: a two-sided virtual user is not available
        return ModeDecision(vu, Mode.HD_UL, PowerPair(0.0, 0.0), float("-inf"))
    return best


@dataclass
class SlotTable:
    """All virtual-user decisions for ``S`` slots.

    Arrays are indexed ``[s, i, j]`` with ``i, j`` in ``0..K`` (0 = nobody);
    infeasible entries (``i == j`` or HD-only two-sided) have ``q = -inf``.
    """

    q: np.ndarray
    mode: np.ndarray
    p_u: np.ndarray
    p_d: np.ndarray
    r_ul: np.ndarray
    r_dl: np.ndarray


def evaluate_slots(g: np.ndarray, h: np.ndarray, psi: float, n_u: float, n_d: float,
                   limits: PowerLimits, cfg: JsmpConfig) -> SlotTable:
    """Vectorised Steps 1-2 for a block of slots (``g`` is (S, K), ``h`` is (S, K, K))."""
    S, K = g.shape
    rm = cfg.rate_model
    shape = (S, K + 1, K + 1)
    q = np.full(shape, -np.inf)
    mode = np.full(shape, -1, dtype=np.int8)
    p_u = np.zeros(shape)
    p_d = np.zeros(shape)
    r_ul = np.zeros(shape)
    r_dl = np.zeros(shape)

    rul_hd = rm(sinr_hd(_UL, g, limits.p_max_u, n_u).ul)
    rdl_hd = rm(sinr_hd(_DL, g, limits.p_max_d, n_d).dl)
    q[:, 1:, 0] = network_utility(cfg.rho, rul_hd, 0.0)
    q[:, 0, 1:] = network_utility(cfg.rho, 0.0, rdl_hd)
    mode[:, 1:, 0] = _CODE[Mode.HD_UL]
    mode[:, 0, 1:] = _CODE[Mode.HD_DL]
    p_u[:, 1:, 0] = limits.p_max_u
    p_d[:, 0, 1:] = limits.p_max_d
    r_ul[:, 1:, 0] = rul_hd
    r_dl[:, 0, 1:] = rdl_hd

    if {"FD", "SIC"} & cfg.modes and K > 1:
        ctx = _pair_ctx(g[:, :, None], g[:, None, :], h, psi, n_u, n_d, limits, cfg.rho)
        off = ~np.eye(K, dtype=bool)
        best_q = np.full((S, K, K), -np.inf)
        for m in (Mode.FD, Mode.SIC):
            if m.value not in cfg.modes:
                continue
            if m is Mode.FD:
                pu, pd, u = solve_fd_batch(ctx, rm, cfg.fd_strategy(), cfg.levels, positive_only=True)
                s = sinr_fd(ctx.g_i, ctx.g_j, ctx.h_ij, psi, PowerPair(pu, pd), n_u, n_d)
            else:
                pu, pd, u = solve_sic_batch(ctx, rm, cfg.strategy, cfg.levels, positive_only=True)
                s = sinr_sic(ctx.g_i, ctx.g_j, ctx.h_ij, psi, PowerPair(pu, pd), n_u, n_d)
            better = (u > best_q) & off
            best_q = np.where(better, u, best_q)
            sub = (slice(None), slice(1, None), slice(1, None))
            q[sub] = np.where(better, u, q[sub])
            mode[sub] = np.where(better, _CODE[m], mode[sub])
            p_u[sub] = np.where(better, pu, p_u[sub])
            p_d[sub] = np.where(better, pd, p_d[sub])
            r_ul[sub] = np.where(better, rm(s.ul), r_ul[sub])
            r_dl[sub] = np.where(better, rm(s.dl), r_dl[sub])
    return SlotTable(q, mode, p_u, p_d, r_ul, r_dl)


# ---------------------------------------------------------------------------
# Step 3: directional utilities
# ---------------------------------------------------------------------------
@dataclass
class DirectionalUtility:
    """Best reachable utility and partner per directional user (0-based users,
    partners 0 = HD alone, otherwise 1-based)."""

    q_ul: np.ndarray
    partner_ul: np.ndarray
    q_dl: np.ndarray
    partner_dl: np.ndarray

    def stacked(self):
        """``[UL_1..UL_K, DL_1..DL_K]`` utilities and partners."""
        return (np.concatenate([self.q_ul, self.q_dl], axis=-1),
                np.concatenate([self.partner_ul, self.partner_dl], axis=-1))


def build_directional_utilities(q: np.ndarray) -> DirectionalUtility:
    """Reduce a ``(..., K+1, K+1)`` utility table to per-user maxima.

    ``np.argmax`` returns the first maximum, which breaks ties toward
    partner 0 (HD) and then the lowest index.
    """
    rows = q[..., 1:, :]          # UL user i, partner j in 0..K
    cols = np.swapaxes(q[..., :, 1:], -1, -2)  # DL user j, partner i in 0..K
    pu = np.argmax(rows, axis=-1)
    pdl = np.argmax(cols, axis=-1)
    return DirectionalUtility(np.take_along_axis(rows, pu[..., None], -1)[..., 0], pu,
                              np.take_along_axis(cols, pdl[..., None], -1)[..., 0], pdl)


# ---------------------------------------------------------------------------
# Step 4: weighted temporal-fair HD core
# ---------------------------------------------------------------------------
@dataclass
class FairnessState:
    """Airtime bookkeeping for ``K`` users (``2K`` directional users)."""

    k: int
    slot_count: int = 0
    picks: np.ndarray = None     # (2K,) direct picks, UL first
    active: np.ndarray = None    # (2K,) activations incl. as partner
    offsets: np.ndarray = None   # (2K,) dimensionless credit offsets
    utility_mean: np.ndarray = None  # (2K,) running mean of each user's utility

    def __post_init__(self):
        n = 2 * self.k
        if self.picks is None:
            self.picks = np.zeros(n, dtype=np.int64)
        if self.active is None:
            self.active = np.zeros(n, dtype=np.int64)
        if self.offsets is None:
            self.offsets = np.zeros(n)
        if self.utility_mean is None:
            self.utility_mean = np.zeros(n)

    @property
    def picks_ul(self):
        return self.picks[: self.k]

    @property
    def picks_dl(self):
        return self.picks[self.k:]

    @property
    def active_ul(self):
        return self.active[: self.k]

    @property
    def active_dl(self):
        return self.active[self.k:]


def _relative(q, mean):
    """Utility relative to the user's own running mean (1 = typical slot)."""
    if mean > 0:
        return q / mean
    return 1.0 if q <= 0 else 2.0


def _core_step(qrow, weights, picks, offsets, means, t, step, bound):
    """Pick one directional user (index into ``[UL..., DL...]``).

    Opportunistic: maximise ``Q / mean(Q) + offset``, each user's utility
    taken relative to its own history so that rescaling one direction (as
    rho does) does not shift airtime quality between directions. A user
    whose owed slots ``w t - picks`` exceed ``bound`` is served first.
    Zero-weight users are never picked directly. Scores within ``_TIE`` are
    treated as equal, so rounding in the relative utility cannot decide.
    """
    n = len(qrow)
    owed_best, k_owed = bound, -1
    for k in range(n):
        if weights[k] > 0:
            owed = weights[k] * t - picks[k]
            if owed > owed_best:
                owed_best, k_owed = owed, k
    if k_owed >= 0:
        return k_owed
    best, best_q, k_best = -np.inf, -np.inf, -1
    for k in range(n):
        if weights[k] > 0:
            m = means[k] if t > 1 else qrow[k]
            s = _relative(qrow[k], m) + offsets[k]
            # near-equal scores tie; the larger raw utility wins, then the lower index
            if s > best + _TIE or (s >= best - _TIE and qrow[k] > best_q):
                best, best_q, k_best = s, qrow[k], k
    if k_best < 0:
        # every eligible score is -inf; fall back to the first eligible user
        k_best = next(k for k in range(n) if weights[k] > 0)
    return k_best


def _validate_weights(weights, k):
    w = np.asarray(weights, dtype=float)
    if w.shape != (2 * k,):
        raise ValueError(f"expected {2 * k} weights (UL then DL), got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    return w


def hd_core_pick(directional: DirectionalUtility, weights, state: FairnessState,
                 step_size: float = 0.01, deficit_bound: float = 50.0):
    """Return ``(direction, user)`` with ``user`` 1-based; does not mutate ``state``."""
    w = _validate_weights(weights, state.k)
    qrow, _ = directional.stacked()
    k = _core_step(list(map(float, qrow)), w.tolist(), state.picks.tolist(),
                   state.offsets.tolist(), state.utility_mean.tolist(), state.slot_count + 1,
                   step_size, deficit_bound)
    return (_UL, k + 1) if k < state.k else (_DL, k - state.k + 1)


class ScheduleOutcome(NamedTuple):
    decision: ModeDecision
    slot_rates: tuple
    slot_utility: float
    pick: tuple


def _decision_at(table: SlotTable, s: int, i: int, j: int, rho: float) -> ModeDecision:
    m = MODE_CODES[int(table.mode[s, i, j])]
    r = (float(table.r_ul[s, i, j]), float(table.r_dl[s, i, j]))
    return ModeDecision(VirtualUser(i, j), m, PowerPair(float(table.p_u[s, i, j]),
                        float(table.p_d[s, i, j])), float(table.q[s, i, j]), r)


def schedule_slot(gains: LinkGains, limits: PowerLimits, config: JsmpConfig, state: FairnessState,
                  weights=None) -> ScheduleOutcome:
    """Run Steps 1-4 for one slot and update ``state`` in place."""
    k = state.k
    w = _validate_weights(np.full(2 * k, 1 / (2 * k)) if weights is None else weights, k)
    table = evaluate_slots(gains.g[None], gains.h[None], gains.psi, gains.n_u, gains.n_d,
                           limits, config)
    du = build_directional_utilities(table.q[0])
    qrow, partners = du.stacked()
    direction, user = hd_core_pick(du, w, state, config.step_size, config.deficit_bound)
    kp = user - 1 if direction == _UL else k + user - 1
    partner = int(partners[kp])
    i, j = (user, partner) if direction == _UL else (partner, user)
    dec = _decision_at(table, 0, i, j, config.rho)
    run_core(qrow[None], partners[None], w, state, config.step_size, config.deficit_bound)
    return ScheduleOutcome(dec, dec.rates, float(network_utility(config.rho, *dec.rates)),
                           (direction, user))


def run_core(qrows: np.ndarray, partners: np.ndarray, weights, state: FairnessState,
             step_size: float = 0.01, deficit_bound: float = 50.0):
    """Step 4 over a block of slots; returns the picked indices (into
    ``[UL..., DL...]``) and updates ``state``.

    Same decisions as calling :func:`schedule_slot` slot by slot.
    """
    k = state.k
    w = _validate_weights(weights, k).tolist()
    picks = state.picks.tolist()
    active = state.active.tolist()
    offsets = state.offsets.tolist()
    means = state.utility_mean.tolist()
    t = state.slot_count
    n = 2 * k
    out = np.empty(len(qrows), dtype=np.int64)
    ql = qrows.tolist()
    pl = partners.tolist()
    for s in range(len(ql)):
        t += 1
        q = ql[s]
        kp = _core_step(q, w, picks, offsets, means, t, step_size, deficit_bound)
        out[s] = kp
        picks[kp] += 1
        active[kp] += 1
        partner = pl[s][kp]
        if partner > 0:
            active[(k + partner - 1) if kp < k else (partner - 1)] += 1
        for m in range(n):
            offsets[m] += step_size * ((w[m] - 1.0) if m == kp else w[m])
            if q[m] > -math.inf:
                means[m] += (q[m] - means[m]) / t
    state.picks[:] = picks
    state.active[:] = active
    state.offsets[:] = offsets
    state.utility_mean[:] = means
    state.slot_count = t
    return out


def airtime_report(state: FairnessState):
    """Activation shares ``(a_ul, a_dl)`` per user."""
    if state.slot_count <= 0:
        raise ValueError("no slots scheduled yet")
    a = state.active / state.slot_count
    return a[: state.k], a[state.k:]
