"""
Simulation configuration and its text format.

The file is INI-style: ``key = value`` lines, optionally grouped under
``[section]`` headers. Sections are cosmetic (every key name is unique), and
keys may also appear before any header. ``#`` or ``;`` starts a comment. Unset keys take the indoor hotzone
defaults below.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import CellGeometry, ChannelParams
from .rates import RateModel, Shannon, default_lte_table, load_staircase

__all__ = ["ConfigError", "SimConfig", "SCENARIOS", "parse_config", "format_config",
           "write_config"]

SCENARIOS = {
    "HD": frozenset({"HD"}),
    "HD+FD": frozenset({"HD", "FD"}),
    "HD+FD+SIC": frozenset({"HD", "FD", "SIC"}),
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


@dataclass(frozen=True)
class SimConfig:
    # geometry
    side_m: float = field(default=40.0, metadata={"section": "geometry"})
    r_min_m: float = field(default=5.0, metadata={"section": "geometry"})
    n_users: int = field(default=6, metadata={"section": "geometry"})
    n_hotspots: int = field(default=0, metadata={"section": "geometry"})
    hotspot_radius_m: float = field(default=10.0, metadata={"section": "geometry"})
    min_distance_m: float = field(default=1.0, metadata={"section": "geometry"})
    # channel
    bandwidth_hz: float = field(default=10e6, metadata={"section": "channel"})
    noise_density_dbm_hz: float = field(default=-174.0, metadata={"section": "channel"})
    nf_bs_db: float = field(default=8.0, metadata={"section": "channel"})
    nf_user_db: float = field(default=9.0, metadata={"section": "channel"})
    shadowing_los_db: float = field(default=3.0, metadata={"section": "channel"})
    shadowing_nlos_db: float = field(default=4.0, metadata={"section": "channel"})
    bs_user_los: bool = field(default=False, metadata={"section": "channel"})
    user_user_los: bool = field(default=False, metadata={"section": "channel"})
    si_cancellation_db: float = field(default=100.0, metadata={"section": "channel"})
    target_snr_db: float = field(default=5.0, metadata={"section": "channel"})
    calibration_distance_m: float = field(default=40.0 * math.sqrt(2.0),
                                          metadata={"section": "channel"})
    # utility
    rho: float = field(default=0.5, metadata={"section": "utility"})
    weights_ul: tuple = field(default=(), metadata={"section": "utility"})
    weights_dl: tuple = field(default=(), metadata={"section": "utility"})
    # power optimisation
    rate_model: str = field(default="shannon", metadata={"section": "power"})
    rate_table: str = field(default="", metadata={"section": "power"})
    power_strategy: str = field(default="analytic", metadata={"section": "power"})
    candidate_set: str = field(default="corners_only", metadata={"section": "power"})
    # scheduler
    scenario: str = field(default="HD+FD+SIC", metadata={"section": "scheduler"})
    step_size: float = field(default=0.01, metadata={"section": "scheduler"})
    deficit_bound: float = field(default=50.0, metadata={"section": "scheduler"})
    # simulation
    drops: int = field(default=500, metadata={"section": "simulation"})
    slots_per_drop: int = field(default=2000, metadata={"section": "simulation"})
    seed: int = field(default=0, metadata={"section": "simulation"})

    def __post_init__(self):
        def need(key, ok, msg):
            if not ok:
                raise ConfigError(key, msg)

        need("side_m", self.side_m > 0, "must be positive")
        need("r_min_m", 0 <= self.r_min_m < self.side_m / 2, "must lie in [0, side_m/2)")
        need("n_users", self.n_users >= 1, "must be >= 1")
        need("n_hotspots", 0 <= self.n_hotspots <= self.n_users, "must lie in [0, n_users]")
        need("hotspot_radius_m", 0 < self.hotspot_radius_m <= self.side_m / 2,
             "must lie in (0, side_m/2]")
        need("min_distance_m", self.min_distance_m > 0, "must be positive")
        need("bandwidth_hz", self.bandwidth_hz > 0, "must be positive")
        need("shadowing_los_db", self.shadowing_los_db >= 0, "must be nonnegative")
        need("shadowing_nlos_db", self.shadowing_nlos_db >= 0, "must be nonnegative")
        need("calibration_distance_m", self.calibration_distance_m > 0, "must be positive")
        need("rho", 0 <= self.rho <= 1, "must lie in [0, 1]")
        need("rate_model", self.rate_model in ("shannon", "lte"), "must be 'shannon' or 'lte'")
        need("rate_table", not self.rate_table or Path(self.rate_table).is_file(),
             f"file not found: {self.rate_table}")
        need("power_strategy", self.power_strategy in ("analytic", "binary")
             or self._grid_levels() is not None, "must be analytic, binary or grid:<n>, n >= 2")
        need("candidate_set", self.candidate_set in ("corners_only", "full"),
             "must be corners_only or full")
        need("scenario", self.scenario in SCENARIOS, f"must be one of {sorted(SCENARIOS)}")
        need("step_size", self.step_size > 0, "must be positive")
        need("deficit_bound", self.deficit_bound > 0, "must be positive")
        need("drops", self.drops >= 1, "must be >= 1")
        need("slots_per_drop", self.slots_per_drop >= 1, "must be >= 1")
        k = self.n_users
        for key in ("weights_ul", "weights_dl"):
            w = getattr(self, key)
            need(key, len(w) in (0, k), f"needs {k} comma-separated values")
            need(key, all(v >= 0 for v in w), "must be nonnegative")
        need("weights_ul", bool(self.weights_ul) == bool(self.weights_dl),
             "set both weights_ul and weights_dl, or neither")
        if self.weights_ul:
            total = sum(self.weights_ul) + sum(self.weights_dl)
            need("weights_ul", abs(total - 1) <= 1e-12, f"UL+DL weights sum to {total}, not 1")

    def _grid_levels(self):
        s = self.power_strategy
        if s.startswith("grid:"):
            try:
                n = int(s[5:])
            except ValueError:
                return None
            return n if n >= 2 else None
        return None

    # -- derived objects ---------------------------------------------------
    @property
    def modes(self) -> frozenset:
        return SCENARIOS[self.scenario]

    @property
    def psi(self) -> float:
        return 10.0 ** (-self.si_cancellation_db / 10.0)

    @property
    def strategy(self) -> str:
        return "grid" if self._grid_levels() else self.power_strategy

    @property
    def levels(self) -> int:
        return self._grid_levels() or 2

    def geometry(self) -> CellGeometry:
        return CellGeometry(self.side_m, self.r_min_m, self.hotspot_radius_m)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(self.shadowing_los_db, self.shadowing_nlos_db,
                             self.bs_user_los, self.user_user_los, self.min_distance_m)

    def weights(self) -> np.ndarray:
        k = self.n_users
        if not self.weights_ul:
            return np.full(2 * k, 1.0 / (2 * k))
        return np.array(self.weights_ul + self.weights_dl, dtype=float)

    def rate(self) -> RateModel:
        if self.rate_model == "shannon":
            return Shannon()
        return load_staircase(self.rate_table) if self.rate_table else default_lte_table()

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in fields(SimConfig)}
_ROOT = "__root__"


def _convert(key: str, raw: str):
    f = _FIELDS[key]
    typ = f.type
    try:
        if typ == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "tuple":
            return _floats(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {typ}") from None


def _from_text(text: str, origin: str = "<string>") -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_ROOT}]\n" + text, source=origin)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc)) from None
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if key not in _FIELDS:
                raise ConfigError(key, "unknown key")
            if key in values:
                raise ConfigError(key, "set more than once")
            values[key] = _convert(key, raw)
    return SimConfig(**values)


def parse_config(path) -> SimConfig:
    """Read a config file; missing keys take their defaults."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError("<file>", f"config file not found: {p}")
    return _from_text(p.read_text(encoding="utf-8"), str(p))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def format_config(config: SimConfig) -> str:
    """Render every field, grouped by section; parses back to an equal config."""
    out = io.StringIO()
    current = None
    for f in fields(SimConfig):
        sec = f.metadata["section"]
        if sec != current:
            out.write(("\n" if current else "") + f"[{sec}]\n")
            current = sec
        out.write(f"{f.name} = {_fmt(getattr(config, f.name))}\n")
    return out.getvalue()


def write_config(config: SimConfig, path) -> None:
    Path(path).write_text(format_config(config), encoding="utf-8")
