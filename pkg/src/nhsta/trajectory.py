"""Closed-loop trajectories in the (x, y) chart and the complex rate phidot.

Analytic loops are circles

    x = r sin(omega t + phi0),   y = c - r cos(omega t + phi0)

with centre ``c = 1`` for the ``original`` loop and ``c = sqrt(1 + r^2)`` for
the ``modified`` one. The modified circles are level sets of Im(phi), which is
why the rate phidot = d/dt arctan(1/z) = -zdot / (1 + z^2) is real on them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import OnCutError, UndersampledError
from .model import phase_arrays

VARIANTS = ("original", "modified", "custom")


@dataclass(frozen=True)
class CustomPath:
    """Cubic interpolant through a user table of (t, x, y)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    x_spline: CubicSpline = field(repr=False, compare=False)
    y_spline: CubicSpline = field(repr=False, compare=False)

    @classmethod
    def from_table(cls, t, x, y) -> "CustomPath":
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if t.ndim != 1 or t.size < 4 or x.shape != t.shape or y.shape != t.shape:
            raise ValueError("custom trajectory needs at least 4 rows of (t, x, y)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("custom trajectory times must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("custom trajectory contains non-finite coordinates")
        closed = x[0] == x[-1] and y[0] == y[-1]
        bc = "periodic" if closed else "not-a-knot"
        return cls(t, x, y, CubicSpline(t, x, bc_type=bc), CubicSpline(t, y, bc_type=bc))


@dataclass(frozen=True)
class TrajectorySpec:
    r: float = 1.5
    omega: float = math.pi / 10
    phi0: float = math.pi
    variant: str = "modified"
    center: Optional[float] = None  # overrides the variant's default circle centre
    path: Optional[CustomPath] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "custom":
            if self.path is None:
                raise ValueError("custom variant needs a path table")
            return
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be finite and > 0, got {self.r!r}")
        if not (math.isfinite(self.omega) and self.omega != 0):
            raise ValueError(f"omega must be finite and nonzero, got {self.omega!r}")
        if not math.isfinite(self.phi0):
            raise ValueError(f"phi0 must be finite, got {self.phi0!r}")

    @classmethod
    def custom(cls, t, x, y) -> "TrajectorySpec":
        return cls(variant="custom", path=CustomPath.from_table(t, x, y))

    @property
    def y_center(self) -> float:
        if self.center is not None:
            return self.center
        if self.variant == "modified":
            return math.sqrt(1.0 + self.r * self.r)
        return 1.0

    @property
    def period(self) -> float:
        if self.variant == "custom":
            return float(self.path.t[-1] - self.path.t[0])
        return 2.0 * math.pi / abs(self.omega)

    @property
    def t_start(self) -> float:
        return float(self.path.t[0]) if self.variant == "custom" else 0.0

    def describe(self) -> dict:
        """JSON-ready description (custom tables are embedded)."""
        out = {"variant": self.variant}
        if self.variant == "custom":
            out["table"] = {
                "t": self.path.t.tolist(),
                "x": self.path.x.tolist(),
                "y": self.path.y.tolist(),
            }
        else:
            out.update(r=self.r, omega=self.omega, phi0=self.phi0, y_center=self.y_center)
        return out


@dataclass(frozen=True)
class TrajectorySample:
    """Kinematics at one time (or, with array fields, at many times).

    ``a = 1 + x^2 - y^2`` and ``b = 2 x y`` are the real and imaginary parts of
    ``1 + z^2``, so ``phidot = -[xdot a + ydot b + i (ydot a - xdot b)] / (a^2 + b^2)``.
    """

    t: float
    x: float
    y: float
    xdot: float
    ydot: float
    a: float
    b: float
    phidot: complex


def phidot_from(x, y, xdot, ydot):
    a = 1.0 + x * x - y * y
    b = 2.0 * x * y
    den = a * a + b * b
    return a, b, -(xdot * a + ydot * b + 1j * (ydot * a - xdot * b)) / den


def kinematics(spec: TrajectorySpec, t):
    """(x, y, xdot, ydot) at time(s) t; analytic for circles, spline otherwise."""
    if spec.variant == "custom":
        p = spec.path
        tt = _wrap_custom(p, t)
        return p.x_spline(tt), p.y_spline(tt), p.x_spline(tt, 1), p.y_spline(tt, 1)
    theta = spec.omega * np.asarray(t, dtype=float) + spec.phi0
    s, c = np.sin(theta), np.cos(theta)
    rw = spec.r * spec.omega
    return spec.r * s, spec.y_center - spec.r * c, rw * c, rw * s


def _wrap_custom(path: CustomPath, t):
    t = np.asarray(t, dtype=float)
    span = path.t[-1] - path.t[0]
    if path.x_spline.extrapolate == "periodic":
        return path.t[0] + np.mod(t - path.t[0], span)
    return t


def sample(spec: TrajectorySpec, t) -> TrajectorySample:
    """Trajectory sample at time ``t`` (scalar or array)."""
    x, y, xd, yd = kinematics(spec, t)
    a, b, pd = phidot_from(x, y, xd, yd)
    if np.ndim(t) == 0:
        return TrajectorySample(
            float(t), float(x), float(y), float(xd), float(yd), float(a), float(b), complex(pd)
        )
    return TrajectorySample(np.asarray(t, dtype=float), x, y, xd, yd, a, b, pd)


def im_phidot_residual(spec: TrajectorySpec, samples: int = 10_000) -> float:
    """max |Im phidot| / max |phidot| over ``samples`` uniform times in one period.

    Zero when phidot vanishes identically (a stationary path).
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    t = spec.t_start + np.arange(samples) * (spec.period / samples)
    pd = sample(spec, t).phidot
    top = float(np.max(np.abs(pd)))
    if top == 0.0:
        return 0.0
    return float(np.max(np.abs(pd.imag))) / top


@dataclass(frozen=True)
class UnwrappedPhase:
    times: np.ndarray
    phase: np.ndarray  # continuous phi_r(t)
    crossings: np.ndarray  # sample indices i where a jump of n*pi was removed between i-1 and i
    delta_phi_r: float

    @property
    def winding(self) -> float:
        """Change of phi_r with the sign flipped so that counterclockwise loops count positive."""
        return -self.delta_phi_r


def unwrap_phase(
    spec: TrajectorySpec, n_periods: int = 1, samples_per_period: int = 10_000
) -> UnwrappedPhase:
    """Continuous phi_r(t) along the loop, stitching principal-branch jumps of pi.

    Raises :class:`UndersampledError` for a jump that is neither below pi/4 nor
    within pi/4 of a nonzero multiple of pi.
    """
    if samples_per_period < 2 or n_periods < 1:
        raise ValueError("need n_periods >= 1 and samples_per_period >= 2")
    n = int(n_periods) * int(samples_per_period)
    t = spec.t_start + np.arange(n + 1) * (n_periods * spec.period / n)
    x, y, _, _ = kinematics(spec, t)
    phi, _ = phase_arrays(x, y)
    bad = np.isnan(phi.real)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise OnCutError(float(x[i]), float(y[i]))
    phr = phi.real
    jumps = np.diff(phr)
    turns = np.round(jumps / math.pi)
    rest = np.abs(jumps - turns * math.pi)
    if np.any(rest >= math.pi / 4):
        i = int(np.argmax(rest >= math.pi / 4))
        raise UndersampledError(
            f"ambiguous phase jump {jumps[i]:.4f} rad between t={t[i]:.6g} and t={t[i + 1]:.6g}"
        )
    phase = phr - math.pi * np.concatenate([[0.0], np.cumsum(turns)])
    return UnwrappedPhase(
        times=t,
        phase=phase,
        crossings=np.flatnonzero(turns) + 1,
        delta_phi_r=float(phase[-1] - phase[0]),
    )


def load_custom_csv(path) -> TrajectorySpec:
    """Read a custom loop from a CSV file with header ``t,x,y``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["t", "x", "y"]:
            raise ValueError(f"{path}: expected header 't,x,y', got {','.join(header)!r}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, 3)
    return TrajectorySpec.custom(data[:, 0], data[:, 1], data[:, 2])
