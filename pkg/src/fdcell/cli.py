"""
Command-line front end.

    fdcell run     --config sim.ini --out-dir out/ [--seed N --drops N --slots N]
    fdcell preset  {fig2,gains,asymmetry} --out-dir out/ [...]
    fdcell replay  out/manifest.json --out-dir again/
    fdcell defaults > sim.ini

Outputs are CSV (tables) plus ``metrics.json`` and ``manifest.json``. The
manifest holds the full effective config, so ``replay`` regenerates every
CSV and ``metrics.json`` byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCENARIOS, ConfigError, SimConfig, _from_text, format_config, parse_config
from .sim import binary_vs_exhaustive_cdf, gain_vs_baseline, run_experiment

log = logging.getLogger("fdcell")

PRESETS = ("fig2", "gains", "asymmetry")

# Column order is part of the schema; bump the version on any change.
CSV_SCHEMAS = {
    "drops.csv": (1, ["drop", "mean_cell_throughput_bps", "mean_r_ul", "mean_r_dl", "gamma",
                      "mean_utility", "n_hd_ul", "n_hd_dl", "n_fd", "n_sic"]),
    "fig2.csv": (1, ["rate_model", "sample", "binary_utility", "exhaustive_utility"]),
    "gains.csv": (1, ["scenario", "n_hotspots", "si_cancellation_db", "rate_model",
                      "mean_cell_throughput_bps", "stderr_bps", "gain_pct"]),
    "asymmetry.csv": (1, ["scenario", "rho", "gamma", "mean_r_ul", "mean_r_dl"]),
}


def _write_csv(path: Path, rows) -> None:
    _, cols = CSV_SCHEMAS[path.name]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r[c]) for c in cols])


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")


# ---------------------------------------------------------------------------
def run_config(config: SimConfig, out_dir: Path, workers: int = 1) -> list[Path]:
    m = run_experiment(config, workers=workers)
    rows = []
    for d, dm in enumerate(m.per_drop):
        h = dm.mode_histogram
        rows.append(dict(drop=d, mean_cell_throughput_bps=dm.mean_cell_throughput_bps,
                         mean_r_ul=dm.mean_r_ul, mean_r_dl=dm.mean_r_dl, gamma=dm.gamma,
                         mean_utility=dm.mean_utility, n_hd_ul=h["HD_UL"], n_hd_dl=h["HD_DL"],
                         n_fd=h["FD"], n_sic=h["SIC"]))
    _write_csv(out_dir / "drops.csv", rows)
    _write_json(out_dir / "metrics.json", m.to_dict(per_drop=False))
    return [out_dir / "drops.csv", out_dir / "metrics.json"]


def _preset_fig2(config, out_dir, samples, workers):
    rows, bundle = [], {}
    for rm in ("shannon", "lte"):
        b, e = binary_vs_exhaustive_cdf(config.replace(rate_model=rm), samples, seed=config.seed)
        rows += [dict(rate_model=rm, sample=n, binary_utility=float(x), exhaustive_utility=float(y))
                 for n, (x, y) in enumerate(zip(b, e))]
        bundle[rm] = {"samples": samples,
                      "fraction_binary_ge_98pct": float(np.mean(b >= 0.98 * e)),
                      "fraction_with_gap": float(np.mean(b < e))}
    _write_csv(out_dir / "fig2.csv", rows)
    return [out_dir / "fig2.csv"], bundle


def _preset_gains(config, out_dir, samples, workers):
    rows, bundle = [], {}
    for rm in ("shannon", "lte"):
        for si in (80.0, 100.0):
            for nh in (0, 1, 2, 3):
                base = None
                for sc in SCENARIOS:
                    c = config.replace(rate_model=rm, si_cancellation_db=si, n_hotspots=nh,
                                       scenario=sc)
                    m = run_experiment(c, workers=workers)
                    base = base or m
                    g = gain_vs_baseline(m, base)
                    rows.append(dict(scenario=sc, n_hotspots=nh, si_cancellation_db=si,
                                     rate_model=rm,
                                     mean_cell_throughput_bps=m.mean_cell_throughput_bps,
                                     stderr_bps=m.stderr.get("mean_cell_throughput_bps", float("nan")),
                                     gain_pct=g))
                    bundle[f"{rm}/{si:g}dB/Nh={nh}/{sc}"] = m.to_dict(per_drop=False)
    _write_csv(out_dir / "gains.csv", rows)
    return [out_dir / "gains.csv"], bundle


def _preset_asymmetry(config, out_dir, samples, workers):
    rows, bundle = [], {}
    for sc in SCENARIOS:
        for rho in (0.3, 0.5, 0.7):
            c = config.replace(rate_model="lte", si_cancellation_db=80.0, n_hotspots=0,
                               scenario=sc, rho=rho)
            m = run_experiment(c, workers=workers)
            rows.append(dict(scenario=sc, rho=rho, gamma=m.gamma, mean_r_ul=m.mean_r_ul,
                             mean_r_dl=m.mean_r_dl))
            bundle[f"{sc}/rho={rho}"] = m.to_dict(per_drop=False)
    _write_csv(out_dir / "asymmetry.csv", rows)
    return [out_dir / "asymmetry.csv"], bundle


_PRESET_FUNCS = {"fig2": _preset_fig2, "gains": _preset_gains, "asymmetry": _preset_asymmetry}


def run_preset(name: str, config: SimConfig, out_dir, samples: int = 1000,
               workers: int = 1) -> list[Path]:
    """Run one of the experiment presets and write its outputs to ``out_dir``."""
    if name not in _PRESET_FUNCS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _now()
    paths, bundle = _PRESET_FUNCS[name](config, out_dir, samples, workers)
    _write_json(out_dir / "metrics.json", bundle)
    paths.append(out_dir / "metrics.json")
    _manifest(out_dir, "preset", config, started, paths, preset=name, samples=samples)
    return paths + [out_dir / "manifest.json"]


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _manifest(out_dir, command, config, started, paths, **extra):
    man = {
        "command": command,
        "code_version": __version__,
        "master_seed": config.seed,
        "config": format_config(config),
        "started_at": started,
        "finished_at": _now(),
        "outputs": [p.name for p in paths],
        "csv_schemas": {p.name: {"version": CSV_SCHEMAS[p.name][0],
                                 "columns": CSV_SCHEMAS[p.name][1]}
                        for p in paths if p.name in CSV_SCHEMAS},
        **extra,
    }
    _write_json(out_dir / "manifest.json", man)


# ---------------------------------------------------------------------------
def _effective_config(args) -> SimConfig:
    cfg = parse_config(args.config) if args.config else SimConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.drops is not None:
        over["drops"] = args.drops
    if args.slots is not None:
        over["slots_per_drop"] = args.slots
    return cfg.replace(**over) if over else cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdcell", description="Full-duplex cell scheduling simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="INI config file (defaults if omitted)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", type=Path, default=Path("results"))
        sp.add_argument("--drops", type=int)
        sp.add_argument("--slots", type=int, help="slots per drop")
        sp.add_argument("--workers", type=int, default=1)

    common(sub.add_parser("run", help="run one configured experiment"))
    pp = sub.add_parser("preset", help="run a predefined sweep")
    pp.add_argument("name", choices=PRESETS)
    pp.add_argument("--samples", type=int, default=1000, help="pairs for fig2")
    common(pp)
    rp = sub.add_parser("replay", help="regenerate outputs from a manifest.json")
    rp.add_argument("manifest", type=Path)
    rp.add_argument("--out-dir", type=Path, required=True)
    rp.add_argument("--workers", type=int, default=1)
    sub.add_parser("defaults", help="print the default config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "defaults":
            sys.stdout.write(format_config(SimConfig()))
            return 0
        if args.command == "replay":
            man = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            cfg = _from_text(man["config"], str(args.manifest))
            if man["command"] == "preset":
                run_preset(man["preset"], cfg, args.out_dir, man.get("samples", 1000), args.workers)
            else:
                _run_cmd(cfg, args.out_dir, args.workers)
            return 0
        cfg = _effective_config(args)
        if args.command == "run":
            _run_cmd(cfg, args.out_dir, args.workers)
        else:
            run_preset(args.name, cfg, args.out_dir, args.samples, args.workers)
        return 0
    except (ConfigError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"fdcell: error: {exc}", file=sys.stderr)
        return 2


def _run_cmd(cfg, out_dir, workers):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _now()
    paths = run_config(cfg, out_dir, workers)
    _manifest(out_dir, "run", cfg, started, paths)


if __name__ == "__main__":
    raise SystemExit(main())
