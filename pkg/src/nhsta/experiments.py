"""Experiment pipelines: spectrum surfaces, control shapes, transfer runs, sensitivity maps."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import NonRealOmegaError, NumericalError
from .evolution import EvolutionConfig, FidelitySeries, propagate, terminal_fidelities
from .model import CDMode, h0_parameter_arrays, phase_arrays
from .trajectory import TrajectorySpec, kinematics, phidot_from

log = logging.getLogger(__name__)

DEFAULT_XRANGE = (-2.0, 2.0)
DEFAULT_YRANGE = (-0.5, 4.0)
DEFAULT_RES = 201


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, config: dict, files: Iterable, wall_time: float, **extra) -> Path:
    """JSON run manifest: tool version, resolved config, wall time, file checksums."""
    path = Path(path)
    doc = {
        "tool": "nhsta",
        "version": __version__,
        "config": config,
        "wall_time_s": wall_time,
        "files": {Path(f).name: sha256(f) for f in files},
    }
    doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, default=_json_default))
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _fmt(v) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# spectrum surfaces


def modified_family_phidot(x, y, omega):
    """phidot at (x, y) on the modified-family circle passing through that point.

    Each point off y = 0 lies on exactly one circle x^2 + (y - c)^2 = c^2 - 1,
    c = (1 + x^2 + y^2) / (2 y); traversed at angular rate omega the
    trajectory has zdot = i omega (z - i c), so phidot = -i omega (z - i c) / (1 + z^2).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = x + 1j * y
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (1.0 + x * x + y * y) / (2.0 * y)
        rate = -1j * omega * (z - 1j * c) / (1.0 + z * z)
    return np.where(y == 0.0, np.nan, rate.real)


def _cell_centres(lo, hi, n):
    return lo + (np.arange(n) + 0.5) * ((hi - lo) / n)


@dataclass
class SpectrumGrid:
    which: str
    x: np.ndarray
    y: np.ndarray
    e_minus: np.ndarray  # (len(y), len(x)) complex, NaN where missing
    e_plus: np.ndarray
    overlay: Optional[dict] = None
    notes: dict = field(default_factory=dict)

    @property
    def gap(self) -> np.ndarray:
        return np.abs(self.e_plus - self.e_minus)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.e_plus.real)

    def to_csv(self, path) -> Path:
        path = Path(path)
        gap = self.gap
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "re_e_minus", "im_e_minus", "re_e_plus", "im_e_plus", "gap"])
            for j, yv in enumerate(self.y):
                for i, xv in enumerate(self.x):
                    em, ep = self.e_minus[j, i], self.e_plus[j, i]
                    w.writerow([_fmt(v) for v in (xv, yv, em.real, em.imag, ep.real, ep.imag, gap[j, i])])
        return path

    def overlay_to_csv(self, path) -> Path:
        path = Path(path)
        o = self.overlay
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "re_e_minus", "im_e_minus", "re_e_plus", "im_e_plus"])
            for row in zip(o["t"], o["x"], o["y"], o["e_minus"], o["e_plus"]):
                t, x, y, em, ep = row
                w.writerow([_fmt(v) for v in (t, x, y, em.real, em.imag, ep.real, ep.imag)])
        return path


def _eigs_h0(x, y):
    _, alpha = phase_arrays(x, y)
    e_plus = alpha + 0j
    return -e_plus, e_plus


def _eigs_hm(x, y, rate):
    _, alpha = phase_arrays(x, y)
    root = np.sqrt(alpha * alpha + 0.25 * rate * rate + 0j)
    # order by real part (ties: imaginary part); roots are real here
    swap = (root.real < 0) | ((root.real == 0) & (root.imag < 0))
    root = np.where(swap, -root, root)
    return -root, root


def spectrum_surface(
    which: str = "h0",
    trajectory: Optional[TrajectorySpec] = None,
    xrange: Tuple[float, float] = DEFAULT_XRANGE,
    yrange: Tuple[float, float] = DEFAULT_YRANGE,
    res: int = DEFAULT_RES,
    overlay_samples: int = 2000,
) -> SpectrumGrid:
    """Eigenvalue surfaces of H0 or Hm (real-part counter-diabatic term) over a cell-centred grid.

    For Hm the coupling at each cell is the phidot of the modified-family
    loop through that cell at the trajectory's angular rate; cells on
    y = 0 or on the branch cut are marked missing.
    """
    if which not in ("h0", "hm"):
        raise ValueError(f"which must be h0 or hm, got {which!r}")
    if which == "hm" and trajectory is None:
        raise ValueError("hm spectrum needs a trajectory (for phidot)")
    if res < 1:
        raise ValueError("res must be >= 1")
    xs = _cell_centres(*xrange, res)
    ys = _cell_centres(*yrange, res)
    gx, gy = np.meshgrid(xs, ys)
    if which == "h0":
        e_minus, e_plus = _eigs_h0(gx, gy)
        notes = {"labels": "E_plus = alpha on the principal branch, E_minus = -alpha"}
    else:
        rate = modified_family_phidot(gx, gy, trajectory.omega)
        e_minus, e_plus = _eigs_hm(gx, gy, rate)
        notes = {
            "labels": "ordered by real part",
            "phidot": "modified-family circle through each cell, angular rate omega, real part",
        }
    grid = SpectrumGrid(which, xs, ys, e_minus, e_plus, notes=notes)
    if trajectory is not None:
        grid.overlay = trajectory_overlay(which, trajectory, overlay_samples)
    return grid


def trajectory_overlay(which: str, spec: TrajectorySpec, samples: int = 2000) -> dict:
    """E_-(t), E_+(t) along one period at half-step-offset times."""
    t = spec.t_start + (np.arange(samples) + 0.5) * (spec.period / samples)
    x, y, xd, yd = kinematics(spec, t)
    if which == "h0":
        em, ep = _eigs_h0(x, y)
    else:
        _, _, rate = phidot_from(x, y, xd, yd)
        em, ep = _eigs_hm(x, y, rate.real)
    return {"t": t, "x": x, "y": y, "e_minus": em, "e_plus": ep}


# ---------------------------------------------------------------------------
# control shapes

SHAPE_COLUMNS = ("t", "k", "kappa", "epsilon", "delta", "omega_c")


def shapes(spec: Optional[TrajectorySpec] = None, samples: int = 2001) -> Dict[str, np.ndarray]:
    """Time series of k, kappa, epsilon, delta and the coupling Omega = phidot/2 over one period."""
    spec = spec or TrajectorySpec(1.5, math.pi / 10, math.pi, "modified")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    t = np.linspace(spec.t_start, spec.t_start + spec.period, samples)
    x, y, xd, yd = kinematics(spec, t)
    _, _, rate = phidot_from(x, y, xd, yd)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rate == 0, 0.0, np.abs(rate.imag) / np.abs(rate))
    if np.max(ratio) > 1e-8:
        i = int(np.argmax(ratio))
        raise NonRealOmegaError(
            f"nonreal-Omega: |Im phidot|/|phidot| = {ratio[i]:.3e} at t = {t[i]:.6g}"
        )
    off, diag = h0_parameter_arrays(x, y)
    return {
        "t": t,
        "k": off.real,
        "kappa": off.imag,
        "epsilon": diag.real,
        "delta": -diag.imag,
        "omega_c": 0.5 * rate.real,
    }


def shapes_to_csv(data: Dict[str, np.ndarray], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SHAPE_COLUMNS)
        for row in zip(*(data[c] for c in SHAPE_COLUMNS)):
            w.writerow([_fmt(v) for v in row])
    return path


# ---------------------------------------------------------------------------
# transfer runs


def conventional_configs(**kw) -> Dict[str, EvolutionConfig]:
    sets = {
        "conv-r0.5-w0.01pi": (0.5, math.pi / 100),
        "conv-r0.5-w0.1pi": (0.5, math.pi / 10),
        "conv-r1.5-w0.1pi": (1.5, math.pi / 10),
        "conv-r1.5-w1pi": (1.5, math.pi),
    }
    return {
        name: EvolutionConfig(
            TrajectorySpec(r, w, math.pi, "original"), hamiltonian="h0", cd_mode=CDMode.NONE, initial="minus", **kw
        )
        for name, (r, w) in sets.items()
    }


def sta_configs(**kw) -> Dict[str, EvolutionConfig]:
    sets = {
        "sta-r0.5-w0.1pi-minus": (0.5, math.pi / 10, "minus"),
        "sta-r1.5-w1pi-minus": (1.5, math.pi, "minus"),
        "sta-r0.5-w0.1pi-plus": (0.5, math.pi / 10, "plus"),
        "sta-r1.5-w1pi-plus": (1.5, math.pi, "plus"),
    }
    return {
        name: EvolutionConfig(
            TrajectorySpec(r, w, math.pi, "modified"), hamiltonian="hm", cd_mode=CDMode.REAL, initial=init, **kw
        )
        for name, (r, w, init) in sets.items()
    }


def transfer_experiment(
    configs: Optional[Dict[str, EvolutionConfig]] = None, out_dir=None
) -> Dict[str, FidelitySeries]:
    """Run named transfer configurations (default: every conventional and shortcut set) and optionally persist them."""
    if configs is None:
        configs = {**conventional_configs(), **sta_configs()}
    results = {}
    for name, cfg in configs.items():
        started = time.perf_counter()
        series = propagate(cfg)
        results[name] = series
        log.info("%s: f_plus(T)=%.6f (%.2fs)", name, series.final["f_plus"], time.perf_counter() - started)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            series.to_csv(out / f"{name}.csv")
            series.to_json(out / f"{name}.json")
    return results


# ---------------------------------------------------------------------------
# sensitivity sweeps

AXIS_NAMES = ("r", "omega", "k", "epsilon", "omega_c", "kappa", "delta")
TRAJECTORY_AXES = ("r", "omega")


@dataclass(frozen=True)
class SweepSpec:
    axes: Tuple[str, str] = ("k", "omega_c")
    r: float = 1.5
    omega: float = 100 * math.pi
    phi0: float = math.pi
    range: float = 0.10
    res: int = 41
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if len(axes) != 2 or axes[0] == axes[1] or any(a not in AXIS_NAMES for a in axes):
            raise ValueError(f"axes must be two distinct names from {AXIS_NAMES}, got {axes}")
        if not (math.isfinite(self.range) and 0 < self.range < 1):
            raise ValueError("range must lie in (0, 1)")
        if self.res < 1 or self.res % 2 == 0:
            raise ValueError(f"res must be odd so the centre cell is unperturbed, got {self.res}")

    @property
    def values(self) -> np.ndarray:
        if self.res == 1:
            return np.zeros(1)
        return np.linspace(-self.range, self.range, self.res)

    def describe(self) -> dict:
        return {
            "axes": list(self.axes),
            "r": self.r,
            "omega": self.omega,
            "phi0": self.phi0,
            "range": self.range,
            "res": self.res,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "deviation": "multiplicative, constant over the run: q -> (1 + d) q",
            "trajectory_axes": "r scales the radius with the circle centre held at sqrt(1 + r0^2); "
            "omega scales the angular rate with the run length held at 2 pi / omega0",
            "base": "hm, real-part counter-diabatic term, modified loop, initial minus, one period",
        }


def cell_config(spec: SweepSpec, deviations: Dict[str, float]) -> EvolutionConfig:
    dr = deviations.get("r", 0.0)
    dw = deviations.get("omega", 0.0)
    traj = TrajectorySpec(
        r=spec.r * (1 + dr),
        omega=spec.omega * (1 + dw),
        phi0=spec.phi0,
        variant="modified",
        center=math.sqrt(1 + spec.r * spec.r),
    )
    ham = {k: v for k, v in deviations.items() if k not in TRAJECTORY_AXES}
    return EvolutionConfig(
        traj,
        hamiltonian="hm",
        cd_mode=CDMode.REAL,
        initial="minus",
        rel_tol=spec.rel_tol,
        abs_tol=spec.abs_tol,
        deviations=ham,
        duration=2 * math.pi / abs(spec.omega),
    )


def _run_cell(args) -> float:
    spec, da, db = args
    try:
        return terminal_fidelities(cell_config(spec, {spec.axes[0]: da, spec.axes[1]: db}))["f_plus"]
    except (NumericalError, ValueError) as exc:
        log.warning("cell (%r, %r) failed: %s", da, db, exc)
        return float("nan")


@dataclass
class SweepGrid:
    spec: SweepSpec
    a_values: np.ndarray
    b_values: np.ndarray
    f_plus: np.ndarray  # (len(a_values), len(b_values)); NaN marks failed cells
    manifest: dict = field(default_factory=dict)

    @property
    def centre(self) -> float:
        return float(self.f_plus[self.spec.res // 2, self.spec.res // 2])

    def to_csv(self, path) -> Path:
        path = Path(path)
        a, b = self.spec.axes
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"d_{a}", f"d_{b}", "f_plus"])
            for i, av in enumerate(self.a_values):
                for j, bv in enumerate(self.b_values):
                    w.writerow([_fmt(av), _fmt(bv), _fmt(self.f_plus[i, j])])
        return path


def run_grid(func, cells: Sequence, jobs: int = 1, chunksize: int = 16) -> list:
    """Map ``func`` over ``cells`` serially or in worker processes; order is preserved."""
    if jobs <= 1:
        return [func(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, cells, chunksize=chunksize))


def sensitivity_sweep(spec: SweepSpec, jobs: int = 1) -> SweepGrid:
    """Terminal F_+ over a grid of relative deviations of two quantities."""
    vals = spec.values
    cells = [(spec, float(a), float(b)) for a in vals for b in vals]
    started = time.perf_counter()
    flat = run_grid(_run_cell, cells, jobs=jobs)
    grid = np.array(flat, dtype=float).reshape(spec.res, spec.res)
    manifest = {
        "spec": spec.describe(),
        "jobs": jobs,
        "wall_time_s": time.perf_counter() - started,
        "failed_cells": int(np.isnan(grid).sum()),
    }
    return SweepGrid(spec, vals.copy(), vals.copy(), grid, manifest)
