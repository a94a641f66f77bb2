"""
Indoor hotzone channel model: user placement, pathloss, log-normal
shadowing and per-slot Rayleigh fading.

Random draws always come from one ``numpy.random.Generator`` per drop, in the
order hotspot centres -> user positions -> shadowing -> per-slot fading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rates import db_to_linear

__all__ = [
    "CellGeometry", "UserLayout", "LargeScaleGains", "LinkGains", "FadingBlock",
    "ChannelParams", "place_users", "pathloss_db", "sample_large_scale",
    "sample_slot_gains", "sample_fading_block", "calibrate", "dbm_to_watts",
]

PL_LOS = (89.5, 16.9)
PL_NLOS = (147.4, 43.3)


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class CellGeometry:
    """Square cell of side ``side_m`` centred on the BS, with an exclusion
    disk of radius ``r_min_m`` around it."""

    side_m: float = 40.0
    r_min_m: float = 5.0
    hotspot_radius_m: float = 10.0

    def __post_init__(self):
        if not self.side_m > 0:
            raise ValueError("side_m must be positive")
        if not 0 <= self.r_min_m < self.side_m / 2:
            raise ValueError("r_min_m must lie in [0, side_m/2)")
        if not 0 < self.hotspot_radius_m <= self.side_m / 2:
            raise ValueError("hotspot_radius_m must lie in (0, side_m/2]")

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        half = self.side_m / 2
        inside = np.all(np.abs(p) <= half, axis=-1)
        return inside & (np.hypot(p[..., 0], p[..., 1]) >= self.r_min_m)


@dataclass(frozen=True)
class ChannelParams:
    shadowing_los_db: float = 3.0
    shadowing_nlos_db: float = 4.0
    bs_user_los: bool = False
    user_user_los: bool = False
    min_distance_m: float = 1.0


@dataclass
class UserLayout:
    positions: np.ndarray
    hotspot_count: int = 0
    hotspot_centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    hotspot_of_user: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.positions)


@dataclass
class LargeScaleGains:
    bs_user_db: np.ndarray      # (K,)
    user_user_db: np.ndarray    # (K, K), diagonal is -inf
    bs_user_los: np.ndarray
    user_user_los: np.ndarray

    @property
    def k(self) -> int:
        return len(self.bs_user_db)


@dataclass
class LinkGains:
    """One slot of linear power gains. ``h[i, j]`` is UL user ``i`` -> DL user ``j``."""

    g: np.ndarray
    h: np.ndarray
    psi: float
    n_u: float
    n_d: float


@dataclass
class FadingBlock:
    """Linear gains for ``S`` consecutive slots: ``g`` is (S, K), ``h`` is (S, K, K)."""

    g: np.ndarray
    h: np.ndarray

    def slot(self, s: int, psi: float, n_u: float, n_d: float) -> LinkGains:
        return LinkGains(self.g[s], self.h[s], psi, n_u, n_d)


# ---------------------------------------------------------------------------
def _uniform_in_disk(rng, center, radius):
    r = radius * np.sqrt(rng.random())
    theta = 2 * np.pi * rng.random()
    return np.array([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])


def place_users(geometry: CellGeometry, k: int, n_h: int, rng: np.random.Generator,
                max_tries: int = 100_000) -> UserLayout:
    """Drop ``k`` users uniformly in the cell (``n_h == 0``) or around ``n_h``
    hotspots.

    Hotspot centres are uniform in the square shrunk by the hotspot radius so
    every disk fits in the cell. User ``u`` goes to hotspot ``u % n_h``; users
    falling in the exclusion disk are redrawn.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= n_h <= k:
        raise ValueError(f"n_h must lie in [0, k={k}], got {n_h}")
    half = geometry.side_m / 2
    pos = np.empty((k, 2))
    if n_h == 0:
        for u in range(k):
            for _ in range(max_tries):
                p = rng.uniform(-half, half, size=2)
                if np.hypot(*p) >= geometry.r_min_m:
                    break
            else:
                raise RuntimeError("could not place user outside the exclusion disk")
            pos[u] = p
        return UserLayout(pos, 0)

    R = geometry.hotspot_radius_m
    centers = rng.uniform(-(half - R), half - R, size=(n_h, 2))
    owner = np.arange(k) % n_h
    for u in range(k):
        for _ in range(max_tries):
            p = _uniform_in_disk(rng, centers[owner[u]], R)
            if np.hypot(*p) >= geometry.r_min_m:
                break
        else:
            raise RuntimeError("hotspot disk lies inside the exclusion disk")
        pos[u] = p
    return UserLayout(pos, n_h, centers, owner)


def pathloss_db(distance_m, los, min_distance_m: float = 1.0):
    """Indoor hotzone pathloss in dB; the formula takes distance in km."""
    d_km = np.maximum(np.asarray(distance_m, dtype=float), min_distance_m) / 1000.0
    a_los, b_los = PL_LOS
    a_nlos, b_nlos = PL_NLOS
    pl = np.where(los, a_los + b_los * np.log10(d_km), a_nlos + b_nlos * np.log10(d_km))
    return float(pl) if pl.ndim == 0 else pl


def sample_large_scale(layout: UserLayout, params: ChannelParams,
                       rng: np.random.Generator) -> LargeScaleGains:
    """Pathloss plus log-normal shadowing for every BS-user and user-user link.

    Shadowing on user-user links is reciprocal (one draw per unordered pair).
    """
    k = layout.k
    p = layout.positions
    d_bs = np.hypot(p[:, 0], p[:, 1])
    diff = p[:, None, :] - p[None, :, :]
    d_uu = np.hypot(diff[..., 0], diff[..., 1])

    los_bs = np.full(k, bool(params.bs_user_los))
    los_uu = np.full((k, k), bool(params.user_user_los))
    np.fill_diagonal(los_uu, False)

    sigma_bs = np.where(los_bs, params.shadowing_los_db, params.shadowing_nlos_db)
    sh_bs = sigma_bs * rng.standard_normal(k)
    iu = np.triu_indices(k, 1)
    sigma_uu = np.where(los_uu[iu], params.shadowing_los_db, params.shadowing_nlos_db)
    sh_uu = np.zeros((k, k))
    sh_uu[iu] = sigma_uu * rng.standard_normal(len(iu[0]))
    sh_uu = sh_uu + sh_uu.T

    bs_db = -pathloss_db(d_bs, los_bs, params.min_distance_m) + sh_bs
    uu_db = -pathloss_db(d_uu, los_uu, params.min_distance_m) + sh_uu
    uu_db = np.atleast_2d(uu_db).astype(float)
    np.fill_diagonal(uu_db, -np.inf)
    return LargeScaleGains(np.atleast_1d(bs_db), uu_db, los_bs, los_uu)


def sample_fading_block(large_scale: LargeScaleGains, slots: int,
                        rng: np.random.Generator) -> FadingBlock:
    """Rayleigh-faded gains for ``slots`` consecutive slots.

    Each slot consumes ``K + K*K`` unit-mean exponential draws (``g`` first,
    then ``h`` row-major), so drawing a block equals drawing slot by slot.
    """
    k = large_scale.k
    x = rng.standard_exponential(size=(slots, k + k * k))
    g = db_to_linear(large_scale.bs_user_db) * x[:, :k]
    h = db_to_linear(large_scale.user_user_db) * x[:, k:].reshape(slots, k, k)
    return FadingBlock(g, h)


def sample_slot_gains(large_scale: LargeScaleGains, psi: float, noise, rng=None,
                      fading=None) -> LinkGains:
    """One slot of linear gains. ``noise`` is ``(n_u, n_d)`` in watts.

    ``fading`` overrides the random draws: a scalar pins every link to that
    value, an array of length ``K + K*K`` supplies them explicitly.
    """
    k = large_scale.k
    if fading is None:
        x = rng.standard_exponential(size=k + k * k)
    else:
        x = np.broadcast_to(np.asarray(fading, dtype=float), (k + k * k,))
    g = db_to_linear(large_scale.bs_user_db) * x[:k]
    h = db_to_linear(large_scale.user_user_db) * x[k:].reshape(k, k)
    n_u, n_d = noise
    return LinkGains(g, h, float(psi), float(n_u), float(n_d))


def calibrate(config):
    """Max transmit powers and noise powers (all watts).

    Noise is thermal density + bandwidth + noise figure. ``p_max`` gives the
    target average HD SNR at ``calibration_distance_m`` under NLOS pathloss
    (fading has unit mean and shadowing zero mean in dB).
    """
    bw_db = 10 * np.log10(config.bandwidth_hz)
    n_u_dbm = config.noise_density_dbm_hz + bw_db + config.nf_bs_db
    n_d_dbm = config.noise_density_dbm_hz + bw_db + config.nf_user_db
    pl = pathloss_db(config.calibration_distance_m, False, config.min_distance_m)
    p_u_dbm = config.target_snr_db + pl + n_u_dbm
    p_d_dbm = config.target_snr_db + pl + n_d_dbm
    return (float(dbm_to_watts(p_u_dbm)), float(dbm_to_watts(p_d_dbm)),
            float(dbm_to_watts(n_u_dbm)), float(dbm_to_watts(n_d_dbm)))
