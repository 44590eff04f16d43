"""Command-line interface: ``nhsta {spectrum,evolve,sweep,shapes,transfer}``.

Every command accepts ``--config FILE`` (JSON or TOML, or a manifest written
by a previous run); explicit flags override file values, which override the
defaults listed in ``--help``. Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .errors import NumericalError
from .evolution import EvolutionConfig, propagate
from .experiments import (
    AXIS_NAMES,
    SweepSpec,
    conventional_configs,
    sensitivity_sweep,
    sha256,
    shapes,
    shapes_to_csv,
    spectrum_surface,
    sta_configs,
    transfer_experiment,
    write_manifest,
)
from .model import CDMode
from .trajectory import TrajectorySpec, load_custom_csv

log = logging.getLogger("nhsta")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


_PI_RE = re.compile(r"^([+-]?(?:(?:\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?)?)\*?pi(?:/((?:\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?))?$")


def parse_real(value) -> float:
    """Float, or a multiple of pi such as ``pi/10``, ``100pi``, ``-2*pi/3``."""
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    else:
        text = str(value).strip().lower().replace(" ", "")
        m = _PI_RE.match(text)
        if m:
            coef = m.group(1)
            coef = 1.0 if coef in (None, "", "+") else (-1.0 if coef == "-" else float(coef))
            out = coef * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
        else:
            out = float(text)
    if not math.isfinite(out):
        raise ValueError(f"not a finite number: {value!r}")
    return out


def parse_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"not an integer: {value!r}")
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return int(str(value))


def parse_pair(value) -> List[float]:
    parts = value if isinstance(value, (list, tuple)) else str(value).split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {value!r}")
    lo, hi = (parse_real(p) for p in parts)
    if not lo < hi:
        raise ValueError(f"range must be increasing, got {value!r}")
    return [lo, hi]


def parse_init(value):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"custom initial state needs two amplitudes, got {value!r}")
        amps = [complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in value]
        return [[a.real, a.imag] for a in amps]
    text = str(value).strip().lower()
    if text in ("minus", "plus"):
        return text
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise ValueError(f"init must be minus, plus or 'a,b' amplitudes, got {value!r}")
    amps = [complex(p.replace("i", "j")) for p in parts]
    if all(a == 0 for a in amps):
        raise ValueError("init amplitudes are both zero")
    return [[a.real, a.imag] for a in amps]


def parse_axes(value) -> List[str]:
    parts = value if isinstance(value, (list, tuple)) else str(value).split(",")
    names = [{"eps": "epsilon", "omega_c": "omega_c"}.get(p.strip(), p.strip()) for p in parts]
    if len(names) != 2 or names[0] == names[1] or any(n not in AXIS_NAMES for n in names):
        raise ValueError(f"axes must be two distinct names from {AXIS_NAMES} (eps = epsilon), got {value!r}")
    return names


def choice(*options):
    def parse(value):
        text = str(value).strip().lower()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {value!r}")
        return text

    return parse


def parse_path(value) -> str:
    return str(value)


@dataclass(frozen=True)
class Opt:
    dest: str
    parse: Callable[[Any], Any]
    default: Any
    help: str
    metavar: Optional[str] = None


COMMON = [
    Opt("out", parse_path, None, "output CSV path (manifest written next to it as .json)", "PATH"),
]

OPTIONS: Dict[str, List[Opt]] = {
    "spectrum": [
        Opt("which", choice("h0", "hm"), "h0", "operator: h0 or hm (hm uses the real part of phidot)"),
        Opt("r", parse_real, None, "loop radius for the trajectory overlay [dimensionless]; required for hm"),
        Opt("omega", parse_real, None, "angular rate [rad per time unit], accepts pi/10 style; required for hm"),
        Opt("phi0", parse_real, math.pi, "initial loop phase [rad]"),
        Opt("trajectory", choice("original", "modified"), None,
            "overlay loop family [h0: original, hm: modified when unset]"),
        Opt("xrange", parse_pair, [-2.0, 2.0], "x extent lo,hi [dimensionless]"),
        Opt("yrange", parse_pair, [-0.5, 4.0], "y extent lo,hi [dimensionless]"),
        Opt("res", parse_int, 201, "cells per axis (cell-centred grid)"),
    ],
    "evolve": [
        Opt("trajectory", choice("original", "modified", "custom"), "modified", "loop family"),
        Opt("table", parse_path, None, "CSV with header t,x,y for --trajectory custom", "PATH"),
        Opt("hamiltonian", choice("h0", "hm"), "hm", "generator: h0 or hm = h0 + counter-diabatic term"),
        Opt("cd", lambda v: CDMode.parse(v).value, "real", "counter-diabatic mode for hm: none, real or full"),
        Opt("init", parse_init, "minus", "initial state: minus, plus or amplitudes 'a,b' (complex allowed, e.g. 1,1j)"),
        Opt("r", parse_real, 0.5, "loop radius [dimensionless]"),
        Opt("omega", parse_real, math.pi / 10, "angular rate [rad per time unit]"),
        Opt("phi0", parse_real, math.pi, "initial loop phase [rad]"),
        Opt("periods", parse_real, 1.0, "run length in periods [periods]"),
        Opt("samples", parse_int, 2000, "output samples per period"),
        Opt("rtol", parse_real, 1e-10, "relative tolerance of the 5(4) pair"),
        Opt("atol", parse_real, 1e-12, "absolute tolerance of the 5(4) pair"),
    ],
    "sweep": [
        Opt("axes", parse_axes, ["k", "omega_c"], "two deviation axes from r, omega, k, eps, omega_c, kappa, delta"),
        Opt("range", parse_real, 0.10, "symmetric relative deviation range [fraction]"),
        Opt("res", parse_int, 41, "grid points per axis (odd)"),
        Opt("jobs", parse_int, 1, "worker processes"),
        Opt("r", parse_real, 1.5, "loop radius [dimensionless]"),
        Opt("omega", parse_real, 100 * math.pi, "angular rate [rad per time unit]"),
        Opt("phi0", parse_real, math.pi, "initial loop phase [rad]"),
        Opt("rtol", parse_real, 1e-10, "relative tolerance"),
        Opt("atol", parse_real, 1e-12, "absolute tolerance"),
    ],
    "shapes": [
        Opt("trajectory", choice("original", "modified"), "modified", "loop family (Omega must stay real)"),
        Opt("r", parse_real, 1.5, "loop radius [dimensionless]"),
        Opt("omega", parse_real, math.pi / 10, "angular rate [rad per time unit]"),
        Opt("phi0", parse_real, math.pi, "initial loop phase [rad]"),
        Opt("samples", parse_int, 2001, "samples over one period, endpoints included"),
    ],
    "transfer": [
        Opt("set", choice("all", "conventional", "sta"), "all", "which configuration set to run"),
        Opt("periods", parse_real, 1.0, "run length in periods [periods]"),
        Opt("samples", parse_int, 2000, "output samples per period"),
        Opt("rtol", parse_real, 1e-10, "relative tolerance"),
    ],
}

DEFAULT_OUT = {
    "spectrum": "spectrum.csv",
    "evolve": "evolve.csv",
    "sweep": "sweep.csv",
    "shapes": "shapes.csv",
    "transfer": "transfer",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhsta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nhsta {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "eigenvalue surfaces of h0 or hm on an (x, y) grid",
        "evolve": "propagate one configuration and write its fidelity series",
        "sweep": "terminal F_+ over a grid of relative parameter deviations",
        "shapes": "time series of k, kappa, epsilon, delta, Omega over one period",
        "transfer": "run the conventional and shortcut transfer sets",
    }
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--config", metavar="FILE", help="JSON/TOML config or previous manifest (default: none)")
        p.add_argument("-q", "--quiet", action="store_true", help="suppress progress on stderr")
        for opt in COMMON + opts:
            default = DEFAULT_OUT[name] if opt.dest == "out" else opt.default
            flag = "--" + opt.dest.replace("_", "-")
            p.add_argument(flag, dest=opt.dest, default=None, metavar=opt.metavar,
                           help=f"{opt.help} (default: {_show(default)})")
    return parser


def _show(value) -> str:
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, float) and value:
        turns = value / math.pi
        if round(turns) and abs(turns - round(turns)) < 1e-12:
            return "pi" if round(turns) == 1 else f"{round(turns)}pi"
        den = math.pi / value
        if abs(den - round(den)) < 1e-9:
            return f"pi/{round(den)}"
    return str(value)


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # type: ignore[import-not-found]
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
    except Exception as exc:  # noqa: BLE001 - any parse failure is a config error
        raise ConfigError(f"--config: cannot parse {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"--config: {path} must hold a table/object")
    if doc.get("tool") == "nhsta" and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    return doc


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and explicit flags; validate every value."""
    opts = {o.dest: o for o in COMMON + OPTIONS[command]}
    merged: Dict[str, Any] = {d: (DEFAULT_OUT[command] if d == "out" else o.default) for d, o in opts.items()}
    if args.config:
        doc = load_config_file(args.config)
        unknown = sorted(set(doc) - set(opts))
        if unknown:
            raise ConfigError(f"--config: unknown key(s) {', '.join(unknown)}")
        merged.update(doc)
    for dest in opts:
        value = getattr(args, dest, None)
        if value is not None:
            merged[dest] = value
    out = {}
    for dest, value in merged.items():
        if value is None:
            out[dest] = None
            continue
        try:
            out[dest] = opts[dest].parse(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--{dest.replace('_', '-')}: {exc}") from None
    return out


def _manifest_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def _init_value(value):
    if isinstance(value, str):
        return value
    return tuple(complex(re_, im) for re_, im in value)


def cmd_spectrum(cfg: dict) -> int:
    which = cfg["which"]
    traj = None
    if cfg["r"] is not None or cfg["omega"] is not None or which == "hm":
        missing = [k for k in ("r", "omega") if cfg[k] is None]
        if missing:
            raise ConfigError(
                f"--{missing[0]}: {which} spectrum with a trajectory needs both --r and --omega"
                + (" (phidot is taken from the trajectory)" if which == "hm" else "")
            )
        variant = cfg["trajectory"] or ("modified" if which == "hm" else "original")
        try:
            traj = TrajectorySpec(cfg["r"], cfg["omega"], cfg["phi0"], variant)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if cfg["res"] < 1:
        raise ConfigError("--res: must be >= 1")
    started = time.perf_counter()
    grid = spectrum_surface(which, traj, tuple(cfg["xrange"]), tuple(cfg["yrange"]), cfg["res"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    files = [grid.to_csv(out)]
    if grid.overlay is not None:
        files.append(grid.overlay_to_csv(out.with_name(out.stem + "_trajectory.csv")))
    write_manifest(_manifest_path(out), cfg, files, time.perf_counter() - started,
                   notes=grid.notes, missing_cells=int(grid.missing.sum()))
    log.info("wrote %s (%d cells, %d missing)", out, grid.missing.size, int(grid.missing.sum()))
    return EXIT_OK


def cmd_evolve(cfg: dict) -> int:
    try:
        if cfg["trajectory"] == "custom":
            if not cfg["table"]:
                raise ConfigError("--table: required with --trajectory custom")
            traj = load_custom_csv(cfg["table"])
        else:
            traj = TrajectorySpec(cfg["r"], cfg["omega"], cfg["phi0"], cfg["trajectory"])
        config = EvolutionConfig(
            traj,
            hamiltonian=cfg["hamiltonian"],
            cd_mode=cfg["cd"],
            initial=_init_value(cfg["init"]),
            n_periods=cfg["periods"],
            rel_tol=cfg["rtol"],
            abs_tol=cfg["atol"],
            output_samples=cfg["samples"],
        )
    except OSError as exc:
        raise ConfigError(f"--table: {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    started = time.perf_counter()
    series = propagate(config)
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    series.to_csv(out)
    series.to_json(
        _manifest_path(out),
        extra={
            "config": cfg,
            "evolution_config": config.describe(),
            "wall_time_s": time.perf_counter() - started,
            "files": {out.name: sha256(out)},
        },
    )
    log.info("wrote %s: f_minus(T)=%.6f f_plus(T)=%.6f", out, series.final["f_minus"], series.final["f_plus"])
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    try:
        spec = SweepSpec(
            axes=tuple(cfg["axes"]),
            r=cfg["r"],
            omega=cfg["omega"],
            phi0=cfg["phi0"],
            range=cfg["range"],
            res=cfg["res"],
            rel_tol=cfg["rtol"],
            abs_tol=cfg["atol"],
        )
    except ValueError as exc:
        flag = "--res" if "res" in str(exc) else ("--range" if "range" in str(exc) else "--axes")
        raise ConfigError(f"{flag}: {exc}") from None
    if cfg["jobs"] < 1:
        raise ConfigError("--jobs: must be >= 1")
    started = time.perf_counter()
    grid = sensitivity_sweep(spec, jobs=cfg["jobs"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    grid.to_csv(out)
    write_manifest(_manifest_path(out), cfg, [out], time.perf_counter() - started,
                   sweep=grid.manifest["spec"], failed_cells=grid.manifest["failed_cells"],
                   f_plus_min=_nan_safe(min, grid.f_plus), f_plus_max=_nan_safe(max, grid.f_plus),
                   f_plus_centre=grid.centre)
    log.info("wrote %s: F_+ in [%.6f, %.6f]", out, _nan_safe(min, grid.f_plus), _nan_safe(max, grid.f_plus))
    return EXIT_OK


def _nan_safe(fn, arr):
    vals = [float(v) for v in arr.ravel() if v == v]
    return fn(vals) if vals else None


def cmd_shapes(cfg: dict) -> int:
    try:
        traj = TrajectorySpec(cfg["r"], cfg["omega"], cfg["phi0"], cfg["trajectory"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg["samples"] < 2:
        raise ConfigError("--samples: must be >= 2")
    started = time.perf_counter()
    data = shapes(traj, cfg["samples"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    shapes_to_csv(data, out)
    write_manifest(_manifest_path(out), cfg, [out], time.perf_counter() - started)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_transfer(cfg: dict) -> int:
    kw = dict(n_periods=cfg["periods"], output_samples=cfg["samples"], rel_tol=cfg["rtol"])
    try:
        configs = {}
        if cfg["set"] in ("all", "conventional"):
            configs.update(conventional_configs(**kw))
        if cfg["set"] in ("all", "sta"):
            configs.update(sta_configs(**kw))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    started = time.perf_counter()
    out_dir = Path(cfg["out"])
    results = transfer_experiment(configs, out_dir)
    files = [out_dir / f"{name}.csv" for name in results]
    summary = {name: s.final for name, s in results.items()}
    write_manifest(out_dir / "manifest.json", cfg, files, time.perf_counter() - started, final=summary)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "shapes": cmd_shapes,
    "transfer": cmd_transfer,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"nhsta {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"nhsta {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
