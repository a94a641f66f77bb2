"""
SINR expressions for the half-duplex, full-duplex and SIC modes, rate
models and the weighted UL/DL network utility.

Every function broadcasts over numpy arrays so that whole batches of user
pairs (or slots) can be evaluated at once. All quantities are linear;
conversions to and from dB happen at the I/O boundary only.
"""

from __future__ import annotations

import enum
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "Mode", "SinrPair", "PowerPair", "RateModel", "Shannon", "Staircase",
    "load_staircase", "default_lte_table", "sinr_hd", "sinr_fd", "sinr_sic",
    "rate", "network_utility", "db_to_linear", "linear_to_db",
]


class Mode(enum.Enum):
    HD_UL = "HD_UL"
    HD_DL = "HD_DL"
    FD = "FD"
    SIC = "SIC"

    @property
    def two_sided(self) -> bool:
        return self in (Mode.FD, Mode.SIC)


class SinrPair(NamedTuple):
    ul: np.ndarray | float
    dl: np.ndarray | float


class PowerPair(NamedTuple):
    p_u: np.ndarray | float
    p_d: np.ndarray | float


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# SINR per mode
# ---------------------------------------------------------------------------
def sinr_hd(direction: str, user_gain, power, noise) -> SinrPair:
    """SINR of a single user served alone in ``direction`` ('UL' or 'DL')."""
    s = np.asarray(power, dtype=float) * np.asarray(user_gain, dtype=float) / noise
    zero = np.zeros_like(s)
    if s.ndim == 0:
        s, zero = float(s), 0.0
    d = direction.upper()
    if d == "UL":
        return SinrPair(s, zero)
    if d == "DL":
        return SinrPair(zero, s)
    raise ValueError(f"direction must be 'UL' or 'DL', got {direction!r}")


def _maybe_scalar(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def sinr_fd(g_i, g_j, h_ij, psi, powers: PowerPair, noise_u, noise_d) -> SinrPair:
    """UL user ``i`` and DL user ``j`` served together, all interference
    treated as noise."""
    p_u, p_d = powers
    ul = p_u * np.asarray(g_i, dtype=float) / (p_d * psi + noise_u)
    dl = p_d * np.asarray(g_j, dtype=float) / (p_u * h_ij + noise_d)
    return SinrPair(_maybe_scalar(ul), _maybe_scalar(dl))


def sinr_sic(g_i, g_j, h_ij, psi, powers: PowerPair, noise_u, noise_d) -> SinrPair:
    """Full-duplex pair where the DL user decodes and removes the UL signal.

    The UL rate must be decodable both at the BS and at the DL user, so the
    UL SINR is the smaller of the two; the DL is then interference free.
    """
    p_u, p_d = powers
    at_bs = p_u * np.asarray(g_i, dtype=float) / (p_d * psi + noise_u)
    at_dl_user = p_u * np.asarray(h_ij, dtype=float) / (p_d * g_j + noise_d)
    dl = p_d * np.asarray(g_j, dtype=float) / noise_d
    return SinrPair(_maybe_scalar(np.minimum(at_bs, at_dl_user)), _maybe_scalar(dl))


# ---------------------------------------------------------------------------
# Rate models
# ---------------------------------------------------------------------------
class RateModel:
    name = "abstract"

    def __call__(self, sinr):
        raise NotImplementedError

    @property
    def max_rate(self) -> float:
        return np.inf


class Shannon(RateModel):
    """``log2(1 + SINR)`` in bps/Hz."""

    name = "shannon"

    def __call__(self, sinr):
        return _maybe_scalar(np.log2(1.0 + np.asarray(sinr, dtype=float)))

    def __repr__(self):
        return "Shannon()"

    def __eq__(self, other):
        return isinstance(other, Shannon)

    def __hash__(self):
        return hash("shannon")


class Staircase(RateModel):
    """Discrete MCS rate model.

    Parameters
    ----------
    thresholds : array_like
        Minimum linear SINR for each step, strictly increasing.
    rates : array_like
        Spectral efficiency (bps/Hz) of each step, nondecreasing.
    """

    name = "lte"

    def __init__(self, thresholds, rates):
        self.thresholds = np.asarray(thresholds, dtype=float)
        self.rates = np.asarray(rates, dtype=float)
        if self.thresholds.ndim != 1 or self.thresholds.shape != self.rates.shape:
            raise ValueError("thresholds and rates must be 1-D and of equal length")
        if self.thresholds.size == 0:
            raise ValueError("staircase needs at least one step")
        if np.any(np.diff(self.thresholds) <= 0):
            raise ValueError("staircase thresholds must be strictly increasing")
        if np.any(np.diff(self.rates) < 0) or np.any(self.rates < 0):
            raise ValueError("staircase rates must be nonnegative and nondecreasing")
        if not np.all(np.isfinite(self.rates)):
            raise ValueError("staircase rates must be finite")
        # leading 0 so that index 0 means "below the first threshold"
        self._table = np.concatenate(([0.0], self.rates))

    @classmethod
    def from_db(cls, thresholds_db, rates):
        return cls(db_to_linear(thresholds_db), rates)

    @property
    def max_rate(self) -> float:
        return float(self.rates[-1])

    def __call__(self, sinr):
        idx = np.searchsorted(self.thresholds, np.asarray(sinr, dtype=float), side="right")
        return _maybe_scalar(self._table[idx])

    def __repr__(self):
        return f"Staircase(<{self.thresholds.size} steps>)"

    def __eq__(self, other):
        return (isinstance(other, Staircase)
                and np.array_equal(self.thresholds, other.thresholds)
                and np.array_equal(self.rates, other.rates))

    def __hash__(self):
        return hash((self.thresholds.tobytes(), self.rates.tobytes()))


def load_staircase(path) -> Staircase:
    """Read a ``<sinr_threshold_db> <bps_per_hz>`` table ('#' comments)."""
    text = Path(path).read_text(encoding="utf-8")
    return _parse_staircase(text, str(path))


def _parse_staircase(text: str, origin: str) -> Staircase:
    th, r = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{origin}:{lineno}: expected '<sinr_db> <bps_per_hz>'")
        th.append(float(parts[0]))
        r.append(float(parts[1]))
    return Staircase.from_db(th, r)


def default_lte_table() -> Staircase:
    text = resources.files("fdcell").joinpath("data/lte_cqi.txt").read_text(encoding="utf-8")
    return _parse_staircase(text, "lte_cqi.txt")


def rate(model: RateModel, sinr_linear):
    return model(sinr_linear)


def network_utility(rho, r_ul, r_dl):
    """Weighted average ``rho * r_dl + (1 - rho) * r_ul``."""
    return _maybe_scalar(rho * np.asarray(r_dl, dtype=float) + (1.0 - rho) * np.asarray(r_ul, dtype=float))
