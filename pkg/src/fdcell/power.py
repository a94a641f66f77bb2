"""
Power optimisation for a scheduled UL/DL user pair in FD and SIC modes.

The search space is the box ``[0, P_u^max] x [0, P_d^max]``. Internally
everything is expressed in box-normalised powers ``x = P_u / P_u^max`` and
``y = P_d / P_d^max`` and four dimensionless link ratios

    a = P_u^max G_i / N_u     UL SNR at the BS
    b = P_d^max Psi / N_u     self-interference to noise at the BS
    c = P_d^max G_j / N_d     DL SNR at the DL user
    e = P_u^max H_ij / N_d    UL-to-DL interference to noise

so that the FD SINRs read ``x a / (y b + 1)`` and ``y c / (x e + 1)``. This
keeps polynomial coefficients well scaled no matter how small the physical
gains are. Utilities, however, are always evaluated from physical powers via
:mod:`fdcell.rates`, so a stored utility is exactly reproducible.

Shannon-rate solvers enumerate KKT candidates; the staircase model is solved
by searching a discrete power grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .rates import PowerPair, RateModel, Shannon, network_utility, sinr_fd, sinr_sic

__all__ = [
    "PairContext", "PowerSolution", "quadratic_real_roots", "fd_utility", "sic_utility",
    "fd_residuals", "fd_corner_candidates", "fd_edge_roots", "fd_interior_roots",
    "fd_candidates", "solve_fd", "sic_breakpoint", "sic_candidates", "solve_sic",
    "grid_search", "power_levels", "solve_fd_batch", "solve_sic_batch",
]

log = logging.getLogger(__name__)

_BOX_TOL = 1e-9
_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class PairContext:
    """Everything the pair power problem depends on.

    Fields may be scalars or equally shaped numpy arrays (a batch of pairs);
    the batch solvers broadcast over them.
    """

    g_i: float
    g_j: float
    h_ij: float
    psi: float
    n_u: float
    n_d: float
    p_max_u: float
    p_max_d: float
    rho: float

    def __post_init__(self):
        for name in ("g_i", "g_j", "h_ij", "psi", "n_u", "n_d"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be nonnegative")
        for name in ("p_max_u", "p_max_d", "n_u", "n_d"):
            if not np.all(np.asarray(getattr(self, name)) > 0):
                raise ValueError(f"{name} must be strictly positive")
        rho = np.asarray(self.rho)
        if np.any((rho < 0) | (rho > 1)):
            raise ValueError("rho must lie in [0, 1]")

    def ratios(self):
        """The dimensionless ``(a, b, c, e)`` link ratios."""
        a = self.p_max_u * np.asarray(self.g_i, dtype=float) / self.n_u
        b = self.p_max_d * np.asarray(self.psi, dtype=float) / self.n_u
        c = self.p_max_d * np.asarray(self.g_j, dtype=float) / self.n_d
        e = self.p_max_u * np.asarray(self.h_ij, dtype=float) / self.n_d
        return a, b, c, e

    def item(self, index) -> "PairContext":
        """Pick one pair out of a batch context."""
        arrs = [np.asarray(getattr(self, n), dtype=float) for n in self.__dataclass_fields__]
        arrs = np.broadcast_arrays(*arrs)
        vals = {n: float(v if v.ndim == 0 else v[index])
                for n, v in zip(self.__dataclass_fields__, arrs)}
        return PairContext(**vals)


@dataclass(frozen=True)
class PowerSolution:
    powers: PowerPair
    utility: float
    candidate_tag: str  # corner | edge-root | interior-root | breakpoint | sic-root | grid


# ---------------------------------------------------------------------------
# Utilities
# ---------------------------------------------------------------------------
def fd_utility(ctx: PairContext, p_u, p_d, model: RateModel):
    s = sinr_fd(ctx.g_i, ctx.g_j, ctx.h_ij, ctx.psi, PowerPair(p_u, p_d), ctx.n_u, ctx.n_d)
    return network_utility(ctx.rho, model(s.ul), model(s.dl))


def sic_utility(ctx: PairContext, p_d, model: RateModel, p_u=None):
    if p_u is None:
        p_u = ctx.p_max_u
    s = sinr_sic(ctx.g_i, ctx.g_j, ctx.h_ij, ctx.psi, PowerPair(p_u, p_d), ctx.n_u, ctx.n_d)
    return network_utility(ctx.rho, model(s.ul), model(s.dl))


# ---------------------------------------------------------------------------
# Quadratics
# ---------------------------------------------------------------------------
def _quadratic_roots_vec(a, b, c):
    """Real roots of ``a t^2 + b t + c`` elementwise; missing roots are NaN.

    Uses the cancellation-free form ``q = -(b + sign(b) sqrt(D)) / 2``,
    roots ``q / a`` and ``c / q``. ``a == 0`` falls back to the linear root.
    A discriminant within ``-1e-12`` (relative to ``b^2``) counts as zero.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    r1 = np.full(a.shape, np.nan)
    r2 = np.full(a.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lin = a == 0
        lin_ok = lin & (b != 0)
        r1 = np.where(lin_ok, -c / np.where(lin_ok, b, 1.0), r1)

        disc = b * b - 4 * a * c
        scale = np.maximum(b * b, np.abs(4 * a * c))
        disc = np.where((disc < 0) & (disc >= -1e-12 * scale), 0.0, disc)
        quad = (~lin) & (disc >= 0)
        sq = np.sqrt(np.where(quad, disc, 0.0))
        sgn = np.where(b >= 0, 1.0, -1.0)
        q = -0.5 * (b + sgn * sq)
        q_ok = quad & (q != 0)
        qa = np.where(quad, q / np.where(quad, a, 1.0), np.nan)
        qc = np.where(q_ok, c / np.where(q_ok, q, 1.0), np.nan)
        # q == 0 only when b == 0 and disc == 0, i.e. a double root at 0
        qc = np.where(quad & ~q_ok, 0.0, qc)
        r1 = np.where(quad, qa, r1)
        r2 = np.where(quad, qc, r2)
    return r1, r2


def quadratic_real_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of ``a t^2 + b t + c = 0`` in ascending order.

    >>> quadratic_real_roots(1, -3, 2)
    [1.0, 2.0]
    """
    if a == 0 and b == 0 and c == 0:
        raise ValueError("all coefficients are zero")
    r1, r2 = _quadratic_roots_vec(a, b, c)
    roots = sorted({float(r) for r in (r1, r2) if np.isfinite(r)})
    return roots


def _in_unit(t):
    return np.isfinite(t) & (t >= -_BOX_TOL) & (t <= 1 + _BOX_TOL)


# ---------------------------------------------------------------------------
# FD mode: stationarity system
# ---------------------------------------------------------------------------
def _fd_terms(rho, a, b, c, e, x, y):
    """The two competing terms of each stationarity equation.

    Setting dR/dP_d = 0 and dR/dP_u = 0 for the FD utility and clearing
    denominators gives ``t1 - t2 = 0`` and ``t3 - t4 = 0``.
    """
    t1 = rho * c * (y * b + 1) * (y * b + 1 + x * a)
    t2 = (1 - rho) * a * b * x * (y * c + x * e + 1)
    t3 = rho * c * e * y * (1 + x * a + y * b)
    t4 = (1 - rho) * a * (1 + x * e + y * c) * (1 + x * e)
    return t1, t2, t3, t4


def _rel(p, q):
    with np.errstate(invalid="ignore", divide="ignore"):
        den = np.maximum(np.maximum(np.abs(p), np.abs(q)), np.finfo(float).tiny)
        return np.abs(p - q) / den


def fd_residuals(ctx: PairContext, p_u, p_d):
    """Relative residuals of the two FD stationarity equations at ``(p_u, p_d)``.

    In physical units the equations are::

        rho G_j (P_d Psi + P_u G_i + N_u)(P_d Psi + N_u)
            - (1-rho) P_u G_i Psi (P_d G_j + P_u H_ij + N_d) = 0
        rho P_d G_j H_ij (P_d Psi + P_u G_i + N_u)
            - (1-rho) G_i (P_d G_j + P_u H_ij + N_d)(P_u H_ij + N_d) = 0

    The residual is ``|lhs - rhs| / max(|lhs|, |rhs|)``.
    """
    a, b, c, e = ctx.ratios()
    x = np.asarray(p_u, dtype=float) / ctx.p_max_u
    y = np.asarray(p_d, dtype=float) / ctx.p_max_d
    t1, t2, t3, t4 = _fd_terms(ctx.rho, a, b, c, e, x, y)
    return _rel(t1, t2), _rel(t3, t4)


def fd_corner_candidates(ctx: PairContext) -> list[PowerPair]:
    return [PowerPair(0.0, ctx.p_max_d), PowerPair(ctx.p_max_u, 0.0),
            PowerPair(ctx.p_max_u, ctx.p_max_d)]


def _safe_roots(A, B, C):
    if A == 0 and B == 0 and C == 0:
        # stationary everywhere along this line: the objective is constant
        return []
    return quadratic_real_roots(A, B, C)


def fd_edge_roots(ctx: PairContext) -> list[PowerPair]:
    """Stationary points along the edges ``P_u = P_u^max`` and ``P_d = P_d^max``.

    On ``P_u = 0`` and ``P_d = 0`` the utility is monotone in the free power,
    so those edges contribute nothing beyond the corners.
    """
    rho = ctx.rho
    a, b, c, e = (float(v) for v in ctx.ratios())
    out = []
    # x = 1, first equation as a quadratic in y
    A = rho * c * b * b
    B = rho * c * b * (2 + a) - (1 - rho) * a * b * c
    C = rho * c * (1 + a) - (1 - rho) * a * b * (1 + e)
    for y in _safe_roots(A, B, C):
        if _in_unit(y):
            out.append(PowerPair(ctx.p_max_u, float(np.clip(y, 0, 1)) * ctx.p_max_d))
    # y = 1, second equation as a quadratic in x
    A = -(1 - rho) * a * e * e
    B = rho * c * e * a - (1 - rho) * a * e * (2 + c)
    C = rho * c * e * (1 + b) - (1 - rho) * a * (1 + c)
    for x in _safe_roots(A, B, C):
        if _in_unit(x):
            out.append(PowerPair(float(np.clip(x, 0, 1)) * ctx.p_max_u, ctx.p_max_d))
    return out


def _fd_newton(rho, a, b, c, e, x, y, iters=50):
    """Damped Newton on the stationarity system from many starts at once."""
    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            t1, t2, t3, t4 = _fd_terms(rho, a, b, c, e, x, y)
            f1 = t1 - t2
            f2 = t3 - t4
            j11 = rho * c * (y * b + 1) * a - (1 - rho) * a * b * (y * c + 2 * x * e + 1)
            j12 = rho * c * b * (2 * y * b + 2 + x * a) - (1 - rho) * a * b * x * c
            j21 = rho * c * e * y * a - (1 - rho) * a * e * (2 + 2 * x * e + y * c)
            j22 = rho * c * e * (1 + x * a + 2 * y * b) - (1 - rho) * a * c * (1 + x * e)
            det = j11 * j22 - j12 * j21
            ok = np.isfinite(det) & (det != 0)
            dx = np.where(ok, (f1 * j22 - f2 * j12) / np.where(ok, det, 1), 0.0)
            dy = np.where(ok, (j11 * f2 - j21 * f1) / np.where(ok, det, 1), 0.0)
            # damping: never move more than half the box in one step
            step = np.maximum(np.abs(dx), np.abs(dy))
            damp = np.where(step > 0.5, 0.5 / np.where(step > 0, step, 1), 1.0)
            x = np.clip(x - damp * dx, 0.0, 1.0)
            y = np.clip(y - damp * dy, 0.0, 1.0)
    return x, y


def _resultant_x_roots(rho, a, b, c, e):
    """Candidate ``x`` values from eliminating ``y`` with the Sylvester
    resultant of the two equations (both quadratic in ``y``)."""
    A1 = np.array([rho * c * b * b])
    B1 = np.array([2 * rho * c * b, rho * c * b * a - (1 - rho) * a * b * c])
    C1 = np.array([rho * c, rho * c * a - (1 - rho) * a * b, -(1 - rho) * a * b * e])
    A2 = np.array([rho * c * e * b])
    B2 = np.array([rho * c * e - (1 - rho) * a * c, rho * c * e * a - (1 - rho) * a * c * e])
    C2 = -(1 - rho) * a * np.array([1.0, 2 * e, e * e])
    if A1[0] == 0 and A2[0] == 0:
        return np.array([])
    u = P.polysub(P.polymul(A1, C2), P.polymul(A2, C1))
    v = P.polysub(P.polymul(A1, B2), P.polymul(A2, B1))
    w = P.polysub(P.polymul(B1, C2), P.polymul(B2, C1))
    res = P.polysub(P.polymul(u, u), P.polymul(v, w))
    scale = np.max(np.abs(res)) if res.size else 0.0
    if not np.isfinite(scale) or scale == 0:
        return np.array([])
    res = P.polytrim(res / scale, 1e-14)
    if res.size < 2:
        return np.array([])
    roots = P.polyroots(res)
    real = roots[np.abs(roots.imag) <= 1e-6 * (1 + np.abs(roots.real))].real
    return real[(real >= -1e-6) & (real <= 1 + 1e-6)]


def _dedupe(points, tol=1e-7):
    out = []
    for p in points:
        if all(abs(p[0] - q[0]) > tol or abs(p[1] - q[1]) > tol for q in out):
            out.append(p)
    return out


def fd_interior_roots(ctx: PairContext, lattice: int = 8) -> list[PowerPair]:
    """Solutions of the FD stationarity system inside the power box.

    Seeds come from the resultant in ``P_u`` (each root is paired with the
    matching ``P_d``) and from a ``lattice x lattice`` grid of starts; all are
    polished by damped Newton and kept only if both residuals are below
    1e-6 relative.
    """
    rho = float(ctx.rho)
    a, b, c, e = (float(v) for v in ctx.ratios())
    seeds_x, seeds_y = [], []
    for x0 in _resultant_x_roots(rho, a, b, c, e):
        A = rho * c * b * b
        B = rho * c * b * (2 + x0 * a) - (1 - rho) * a * b * c * x0
        C = rho * c * (1 + x0 * a) - (1 - rho) * a * b * x0 * (1 + x0 * e)
        for y0 in _quadratic_roots_vec(A, B, C):
            if np.isfinite(y0) and -1e-6 <= y0 <= 1 + 1e-6:
                seeds_x.append(x0)
                seeds_y.append(float(y0))
    g = (np.arange(lattice) + 0.5) / lattice
    gx, gy = np.meshgrid(g, g, indexing="ij")
    seeds_x = np.concatenate([np.clip(seeds_x, 0, 1), gx.ravel()])
    seeds_y = np.concatenate([np.clip(seeds_y, 0, 1), gy.ravel()])

    x, y = _fd_newton(rho, a, b, c, e, seeds_x, seeds_y)
    t1, t2, t3, t4 = _fd_terms(rho, a, b, c, e, x, y)
    ok = (_rel(t1, t2) < _RESIDUAL_TOL) & (_rel(t3, t4) < _RESIDUAL_TOL)
    pts = _dedupe(sorted(zip(x[ok].tolist(), y[ok].tolist())))
    return [PowerPair(px * ctx.p_max_u, py * ctx.p_max_d) for px, py in pts]


def fd_candidates(ctx: PairContext, candidate_set: str = "full") -> list[PowerPair]:
    """Candidate optima of the FD problem for Shannon rates.

    ``corners_only`` keeps the three corners (the on/off strategy); ``full``
    adds edge and interior stationary points.
    """
    cands = [(p, "corner") for p in fd_corner_candidates(ctx)]
    if candidate_set == "full":
        cands += [(p, "edge-root") for p in fd_edge_roots(ctx)]
        cands += [(p, "interior-root") for p in fd_interior_roots(ctx)]
    elif candidate_set != "corners_only":
        raise ValueError(f"unknown candidate_set {candidate_set!r}")
    return [p for p, _ in _dedupe_tagged(ctx, cands)]


def _dedupe_tagged(ctx, cands, tol=1e-9):
    out = []
    for p, tag in cands:
        xu, yd = p.p_u / ctx.p_max_u, p.p_d / ctx.p_max_d
        if all(abs(xu - q.p_u / ctx.p_max_u) > tol or abs(yd - q.p_d / ctx.p_max_d) > tol
               for q, _ in out):
            out.append((p, tag))
    return out


def _pick(utils, p_u, p_d):
    """Index of the best candidate; ties go to lower total power, then lower P_u."""
    utils = np.asarray(utils, dtype=float)
    best = np.max(utils)
    mask = utils == best
    tot = np.where(mask, np.asarray(p_u) + np.asarray(p_d), np.inf)
    mask &= tot == np.min(tot)
    pu = np.where(mask, p_u, np.inf)
    return int(np.argmin(pu))


def solve_fd(ctx: PairContext, rate_model: RateModel | None = None,
             candidate_set: str = "full", levels: int = 2) -> PowerSolution:
    """Best ``(P_u, P_d)`` in FD mode.

    Shannon rates: evaluate every candidate and keep the best. Staircase
    rates: exhaustive search over ``levels`` evenly spaced levels per
    direction (``levels=2`` is the on/off strategy).
    """
    rate_model = rate_model or Shannon()
    if not isinstance(rate_model, Shannon):
        return grid_search(ctx, rate_model, power_levels(ctx.p_max_u, levels),
                           power_levels(ctx.p_max_d, levels))
    cands = [(p, "corner") for p in fd_corner_candidates(ctx)]
    if candidate_set == "full":
        cands += [(p, "edge-root") for p in fd_edge_roots(ctx)]
        cands += [(p, "interior-root") for p in fd_interior_roots(ctx)]
    elif candidate_set != "corners_only":
        raise ValueError(f"unknown candidate_set {candidate_set!r}")
    cands = _dedupe_tagged(ctx, cands)
    pu = np.array([p.p_u for p, _ in cands])
    pd = np.array([p.p_d for p, _ in cands])
    utils = fd_utility(ctx, pu, pd, rate_model)
    k = _pick(utils, pu, pd)
    return PowerSolution(PowerPair(float(pu[k]), float(pd[k])), float(utils[k]), cands[k][1])


# ---------------------------------------------------------------------------
# SIC mode
# ---------------------------------------------------------------------------
def _sic_candidate_y(rho, a, b, c, e):
    """Normalised DL power candidates, stacked on axis 0 (NaN = absent).

    Rows: 0, 1, the breakpoint where the two UL terms are equal, two roots of
    the UDI-limited stationarity quadratic, two roots of the BS-limited one.
    """
    a, b, c, e, rho = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, e, rho)))
    with np.errstate(divide="ignore", invalid="ignore"):
        den = a * c - e * b
        tiny = np.abs(den) < 1e-15 * np.maximum(np.abs(a * c), np.abs(e * b))
        brk = np.where(tiny | (den == 0), np.nan, (e - a) / np.where(den == 0, 1, den))
    # UDI-limited branch: rho c (y c + e + 1)(y c + 1) - (1-rho) c e (y c + 1) = 0
    r4, r5 = _quadratic_roots_vec(rho * c ** 3,
                                  rho * c * c * (2 + e) - (1 - rho) * c * c * e,
                                  rho * c * (1 + e) - (1 - rho) * c * e)
    # BS-limited branch: rho c (y b + a + 1)(y b + 1) - (1-rho) a b (y c + 1) = 0
    r6, r7 = _quadratic_roots_vec(rho * c * b * b,
                                  rho * c * b * (2 + a) - (1 - rho) * a * b * c,
                                  rho * c * (1 + a) - (1 - rho) * a * b)
    ys = np.stack([np.zeros_like(a), np.ones_like(a), brk, r4, r5, r6, r7])
    ys = np.where(_in_unit(ys), np.clip(ys, 0.0, 1.0), np.nan)
    return ys


_SIC_TAGS = ("corner", "corner", "breakpoint", "sic-root", "sic-root", "sic-root", "sic-root")


def sic_breakpoint(ctx: PairContext) -> float:
    """DL power at which the two UL SINR terms of SIC cross (may be outside the box,
    NaN if the terms never cross)."""
    num = ctx.h_ij * ctx.n_u - ctx.g_i * ctx.n_d
    den = ctx.g_i * ctx.g_j - ctx.psi * ctx.h_ij
    if abs(den) < 1e-15 * max(abs(ctx.g_i * ctx.g_j), abs(ctx.psi * ctx.h_ij)) or den == 0:
        return float("nan")
    return float(num / den)


def sic_candidates(ctx: PairContext) -> list[float]:
    """Candidate optimal DL powers (watts) for SIC mode with ``P_u = P_u^max``."""
    ys = _sic_candidate_y(ctx.rho, *ctx.ratios())
    vals = sorted({float(y) for y in ys if np.isfinite(y)})
    out = []
    for y in vals:
        if not out or abs(y - out[-1]) > 1e-9:
            out.append(y)
    return [y * ctx.p_max_d for y in out]


def solve_sic(ctx: PairContext, rate_model: RateModel | None = None,
              levels: int = 2) -> PowerSolution:
    """Best DL power in SIC mode; the UL always transmits at full power."""
    rate_model = rate_model or Shannon()
    if not isinstance(rate_model, Shannon):
        return grid_search(ctx, rate_model, np.array([ctx.p_max_u]),
                           power_levels(ctx.p_max_d, levels), mode="sic")
    ys = _sic_candidate_y(ctx.rho, *ctx.ratios())
    keep = np.isfinite(ys)
    pd = ys[keep] * ctx.p_max_d
    tags = [t for t, k in zip(_SIC_TAGS, keep) if k]
    utils = sic_utility(ctx, pd, rate_model)
    k = _pick(utils, np.full_like(pd, ctx.p_max_u), pd)
    return PowerSolution(PowerPair(float(ctx.p_max_u), float(pd[k])), float(utils[k]), tags[k])


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------
def power_levels(p_max: float, n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("need at least 2 power levels")
    return np.linspace(0.0, p_max, n)


def grid_search(ctx: PairContext, rate_model: RateModel, levels_u, levels_d,
                mode: str = "fd") -> PowerSolution:
    """Exhaustive search over ``levels_u x levels_d`` (watts).

    In ``sic`` mode ``levels_u`` is ignored and ``P_u = P_u^max``.
    """
    levels_d = np.asarray(levels_d, dtype=float)
    if mode == "sic":
        pu = np.full(levels_d.shape, float(ctx.p_max_u))
        pd = levels_d
        utils = sic_utility(ctx, pd, rate_model, pu)
    elif mode == "fd":
        pu, pd = np.meshgrid(np.asarray(levels_u, dtype=float), levels_d, indexing="ij")
        pu, pd = pu.ravel(), pd.ravel()
        utils = fd_utility(ctx, pu, pd, rate_model)
    else:
        raise ValueError(f"mode must be 'fd' or 'sic', got {mode!r}")
    k = _pick(utils, pu, pd)
    return PowerSolution(PowerPair(float(pu[k]), float(pd[k])), float(np.asarray(utils)[k]), "grid")


# ---------------------------------------------------------------------------
# Batch solvers used by the scheduler
# ---------------------------------------------------------------------------
def _pick_batch(utils, p_u, p_d):
    """Vectorised :func:`_pick` along axis 0."""
    best = np.max(utils, axis=0)
    mask = utils == best
    tot = np.where(mask, p_u + p_d, np.inf)
    mask &= tot == np.min(tot, axis=0)
    pu = np.where(mask, p_u, np.inf)
    return np.argmin(pu, axis=0)


def _take(arr, idx):
    return np.take_along_axis(arr, idx[None], axis=0)[0]


def solve_fd_batch(ctx: PairContext, rate_model: RateModel, strategy: str = "binary",
                   levels: int = 2, positive_only: bool = False):
    """FD solution for every pair in a batch context.

    ``strategy`` is ``binary``/``grid`` (search ``levels`` levels per
    direction, both rate models) or ``analytic`` (Shannon: full candidate set,
    solved pair by pair; staircase falls back to the grid). With
    ``positive_only`` both powers must be nonzero. Returns
    ``(p_u, p_d, utility)`` arrays.
    """
    shape = np.broadcast(*(np.asarray(getattr(ctx, f)) for f in ctx.__dataclass_fields__)).shape
    if strategy == "analytic" and isinstance(rate_model, Shannon):
        p_u = np.empty(shape)
        p_d = np.empty(shape)
        u = np.empty(shape)
        for idx in np.ndindex(*shape):
            c1 = ctx.item(idx)
            sol = _solve_fd_positive(c1, rate_model) if positive_only else solve_fd(c1, rate_model)
            p_u[idx], p_d[idx], u[idx] = sol.powers.p_u, sol.powers.p_d, sol.utility
        return p_u, p_d, u
    n = 2 if strategy in ("binary", "analytic") else levels
    fr = np.linspace(0.0, 1.0, n)
    if positive_only:
        fr = fr[1:]
    fu, fd = np.meshgrid(fr, fr, indexing="ij")
    fu = fu.ravel().reshape((-1,) + (1,) * len(shape))
    fd = fd.ravel().reshape((-1,) + (1,) * len(shape))
    pu = np.broadcast_to(fu * np.asarray(ctx.p_max_u), (fu.shape[0],) + shape)
    pd = np.broadcast_to(fd * np.asarray(ctx.p_max_d), (fd.shape[0],) + shape)
    utils = fd_utility(ctx, pu, pd, rate_model)
    k = _pick_batch(utils, pu, pd)
    return _take(pu, k), _take(pd, k), _take(utils, k)


def _solve_fd_positive(ctx, rate_model):
    cands = [(PowerPair(ctx.p_max_u, ctx.p_max_d), "corner")]
    cands += [(p, "edge-root") for p in fd_edge_roots(ctx)]
    cands += [(p, "interior-root") for p in fd_interior_roots(ctx)]
    cands = [(p, t) for p, t in _dedupe_tagged(ctx, cands) if p.p_u > 0 and p.p_d > 0]
    pu = np.array([p.p_u for p, _ in cands])
    pd = np.array([p.p_d for p, _ in cands])
    utils = fd_utility(ctx, pu, pd, rate_model)
    k = _pick(utils, pu, pd)
    return PowerSolution(PowerPair(float(pu[k]), float(pd[k])), float(utils[k]), cands[k][1])


def solve_sic_batch(ctx: PairContext, rate_model: RateModel, strategy: str = "binary",
                    levels: int = 2, positive_only: bool = False):
    """SIC solution for every pair in a batch context (``P_u = P_u^max``).

    ``analytic`` with Shannon rates evaluates the closed-form DL power
    candidates; otherwise ``levels`` evenly spaced DL levels are searched.
    """
    a, b, c, e = ctx.ratios()
    shape = np.broadcast(a, b, c, e, np.asarray(ctx.rho), np.asarray(ctx.p_max_u),
                         np.asarray(ctx.p_max_d)).shape
    if strategy == "analytic" and isinstance(rate_model, Shannon):
        ys = _sic_candidate_y(ctx.rho, a, b, c, e)
        ys = np.broadcast_to(ys, (ys.shape[0],) + shape)
    else:
        n = 2 if strategy in ("binary", "analytic") else levels
        fr = np.linspace(0.0, 1.0, n).reshape((-1,) + (1,) * len(shape))
        ys = np.broadcast_to(fr, (fr.shape[0],) + shape)
    if positive_only:
        ys = np.where(ys > 0, ys, np.nan)
    valid = np.isfinite(ys)
    pd = np.where(valid, ys, 0.0) * np.asarray(ctx.p_max_d)
    pu = np.broadcast_to(np.asarray(ctx.p_max_u, dtype=float), pd.shape)
    utils = np.where(valid, sic_utility(ctx, pd, rate_model, pu), -np.inf)
    k = _pick_batch(utils, pu, pd)
    return _take(pu, k), _take(pd, k), _take(utils, k)
