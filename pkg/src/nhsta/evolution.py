"""Non-unitary propagation and biorthogonal fidelities."""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from . import __version__
from .errors import DegenerateError, OnCutError, OverflowGuardError
from .integrate import StepStats, dopri5
from .model import (
    CDMode,
    PhasePoint,
    alpha_from_phase,
    eigenbasis_from_phase,
    h0_parameter_arrays,
    phase_arrays,
    phase_at,
    principal_phase,
)
from .trajectory import TrajectorySample, TrajectorySpec, kinematics, phidot_from

HAMILTONIANS = ("h0", "hm")
# Hamiltonian-level quantities that can be scaled by a constant factor (1 + deviation)
SCALABLE = ("k", "kappa", "epsilon", "delta", "omega_c")
NORM_BOUNDS = (1e-12, 1e12)
CSV_COLUMNS = ("t", "f_minus", "f_plus", "raw_minus", "raw_plus", "norm", "eta")


@dataclass(frozen=True)
class EvolutionConfig:
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    hamiltonian: str = "hm"
    cd_mode: CDMode = CDMode.REAL
    initial: Union[str, tuple] = "minus"  # "minus", "plus" or two complex amplitudes
    n_periods: float = 1.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    output_samples: int = 2000  # per period
    deviations: Mapping[str, float] = field(default_factory=dict)
    duration: Optional[float] = None  # overrides n_periods * period

    def __post_init__(self):
        object.__setattr__(self, "cd_mode", CDMode.parse(self.cd_mode))
        object.__setattr__(self, "deviations", dict(self.deviations))
        if self.hamiltonian not in HAMILTONIANS:
            raise ValueError(f"hamiltonian must be h0 or hm, got {self.hamiltonian!r}")
        if isinstance(self.initial, str):
            if self.initial not in ("minus", "plus"):
                raise ValueError(f"initial must be 'minus', 'plus' or two amplitudes, got {self.initial!r}")
        else:
            amps = tuple(complex(v) for v in self.initial)
            if len(amps) != 2 or not all(cmath.isfinite(v) for v in amps) or amps == (0, 0):
                raise ValueError("custom initial state needs two finite, not both zero, amplitudes")
            object.__setattr__(self, "initial", amps)
        if not (math.isfinite(self.n_periods) and self.n_periods > 0):
            raise ValueError("n_periods must be > 0")
        for name in ("rel_tol", "abs_tol"):
            tol = getattr(self, name)
            if not 1e-14 <= tol <= 1e-3:
                raise ValueError(f"{name} must lie in [1e-14, 1e-3], got {tol!r}")
        if int(self.output_samples) < 2:
            raise ValueError("output_samples must be >= 2")
        unknown = set(self.deviations) - set(SCALABLE)
        if unknown:
            raise ValueError(f"unknown deviation quantities {sorted(unknown)}; allowed {SCALABLE}")
        if self.duration is not None and not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError("duration must be > 0")

    @property
    def t_end(self) -> float:
        if self.duration is not None:
            return float(self.duration)
        return self.n_periods * self.trajectory.period

    def describe(self) -> dict:
        initial = self.initial
        if not isinstance(initial, str):
            initial = [[v.real, v.imag] for v in initial]
        return {
            "trajectory": self.trajectory.describe(),
            "hamiltonian": self.hamiltonian,
            "cd_mode": self.cd_mode.value,
            "initial": initial,
            "n_periods": self.n_periods,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "output_samples": int(self.output_samples),
            "deviations": dict(sorted(self.deviations.items())),
            "duration": self.duration,
            "t_end": self.t_end,
        }


def _scales(config: EvolutionConfig):
    dev = config.deviations
    return tuple(1.0 + dev.get(name, 0.0) for name in SCALABLE)


def hamiltonian_function(config: EvolutionConfig):
    """H(t) as a fast scalar-time closure built from the trajectory kinematics."""
    spec = config.trajectory
    sk, skap, seps, sdel, som = _scales(config)
    use_cd = config.hamiltonian == "hm" and config.cd_mode is not CDMode.NONE
    real_only = config.cd_mode is CDMode.REAL
    if spec.variant == "custom":
        def kin(t):
            return tuple(float(v) for v in kinematics(spec, t))
    else:
        r, w, p0, c0 = spec.r, spec.omega, spec.phi0, spec.y_center
        rw = r * w

        def kin(t):
            th = w * t + p0
            s, c = math.sin(th), math.cos(th)
            return r * s, c0 - r * c, rw * c, rw * s

    def h(t):
        x, y, xd, yd = kin(t)
        phi = principal_phase(x, y)
        alpha = alpha_from_phase(phi.real, phi.imag, x)
        off = alpha * cmath.sin(phi)  # k + i kappa
        diag = alpha * cmath.cos(phi)  # epsilon - i delta
        off = complex(sk * off.real, skap * off.imag)
        diag = complex(seps * diag.real, sdel * diag.imag)
        if use_cd:
            z = complex(x, y)
            rate = -complex(xd, yd) / (1.0 + z * z)
            if real_only:
                rate = complex(rate.real, 0.0)
            half = 0.5 * som * rate
            return np.array([[diag, off - 1j * half], [off + 1j * half, -diag]])
        return np.array([[diag, off], [off, -diag]])

    return h


def hamiltonian_batch(config: EvolutionConfig):
    """Vectorized counterpart of :func:`hamiltonian_function` (array of times)."""
    spec = config.trajectory
    sk, skap, seps, sdel, som = _scales(config)
    use_cd = config.hamiltonian == "hm" and config.cd_mode is not CDMode.NONE

    def hb(times):
        x, y, xd, yd = kinematics(spec, times)
        off, diag = h0_parameter_arrays(x, y)
        off = sk * off.real + 1j * skap * off.imag
        diag = seps * diag.real + 1j * sdel * diag.imag
        out = np.empty(np.shape(times) + (2, 2), dtype=complex)
        out[..., 0, 0] = diag
        out[..., 1, 1] = -diag
        out[..., 0, 1] = off
        out[..., 1, 0] = off
        if use_cd:
            _, _, rate = phidot_from(x, y, xd, yd)
            if config.cd_mode is CDMode.REAL:
                rate = rate.real + 0j
            half = 0.5 * som * rate
            out[..., 0, 1] -= 1j * half
            out[..., 1, 0] += 1j * half
        return out

    return hb


def initial_state(config: EvolutionConfig) -> np.ndarray:
    spec = config.trajectory
    x, y, _, _ = kinematics(spec, spec.t_start)
    basis = eigenbasis_from_phase(phase_at((float(x), float(y))))
    if config.initial == "minus":
        return basis.right_minus.astype(complex)
    if config.initial == "plus":
        return basis.right_plus.astype(complex)
    return np.array(config.initial, dtype=complex)


def adiabatic_frame(psi, p) -> np.ndarray:
    """Coefficients (plus, minus) of ``psi`` in the instantaneous H0 eigenbasis.

    This is R~^dagger psi with rows (cos phi/2, sin phi/2) and
    (-sin phi/2, cos phi/2), i.e. the biorthogonal projections.
    """
    phase = p if isinstance(p, PhasePoint) else phase_at(p)
    half = phase.phi / 2
    c, s = cmath.cos(half), cmath.sin(half)
    psi = np.asarray(psi, dtype=complex)
    return np.array([c * psi[0] + s * psi[1], -s * psi[0] + c * psi[1]])


def criterion_eta(smp: TrajectorySample, phase: PhasePoint) -> float:
    """Adiabaticity measure |<plus^|d/dt minus>| / |E_- - E_+| = |phidot| / |4 alpha|.

    The oscillating phase factor exp(i int omega) is left out: its modulus is
    one whenever the spectrum is real.
    """
    if abs(phase.alpha) < 1e-12:
        raise DegenerateError("at-degeneracy: |alpha| < 1e-12, the adiabatic gap closes")
    return abs(smp.phidot) / abs(4.0 * phase.alpha)


@dataclass
class FidelitySeries:
    times: np.ndarray
    f_minus: np.ndarray
    f_plus: np.ndarray
    raw_minus: np.ndarray
    raw_plus: np.ndarray
    norm: np.ndarray
    eta: np.ndarray
    eta_summand: np.ndarray  # complex, includes exp(i int omega_{+-})
    final: dict
    psi_final: np.ndarray
    config: EvolutionConfig
    stats: StepStats
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            cols = (self.times, self.f_minus, self.f_plus, self.raw_minus, self.raw_plus, self.norm, self.eta)
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])
        return path

    def manifest(self) -> dict:
        return {
            "tool": "nhsta",
            "version": __version__,
            "config": self.config.describe(),
            "final": self.final,
            "psi_final": [[v.real, v.imag] for v in self.psi_final.tolist()],
            "stats": {"accepted": self.stats.accepted, "rejected": self.stats.rejected, "nfev": self.stats.nfev},
            "metadata": self.metadata,
        }

    def to_json(self, path, extra: Optional[dict] = None) -> Path:
        path = Path(path)
        doc = self.manifest()
        doc["series"] = {
            "t": self.times.tolist(),
            "f_minus": self.f_minus.tolist(),
            "f_plus": self.f_plus.tolist(),
            "raw_minus": self.raw_minus.tolist(),
            "raw_plus": self.raw_plus.tolist(),
            "norm": self.norm.tolist(),
            "eta": [v if math.isfinite(v) else None for v in self.eta.tolist()],
            "eta_summand": [[v.real, v.imag] if cmath.isfinite(v) else None for v in self.eta_summand.tolist()],
        }
        if extra:
            doc.update(extra)
        path.write_text(json.dumps(doc, indent=2))
        return path


def _guard(t, y):
    n = math.sqrt(float(np.vdot(y, y).real))
    if not NORM_BOUNDS[0] <= n <= NORM_BOUNDS[1]:
        raise OverflowGuardError(t, n, NORM_BOUNDS)


def _integrate(config: EvolutionConfig, times=None):
    h = hamiltonian_function(config)
    spec = config.trajectory
    t0 = spec.t_start

    def rhs(t, y):
        return -1j * (h(t) @ y)

    psi0 = initial_state(config)
    _guard(t0, psi0)
    return dopri5(
        rhs, t0, t0 + config.t_end, psi0, rtol=config.rel_tol, atol=config.abs_tol, t_eval=times, on_step=_guard
    )


def _fidelities(phi, psi):
    half = phi / 2
    c, s = np.cos(half), np.sin(half)
    plus = c * psi[..., 0] + s * psi[..., 1]
    minus = -s * psi[..., 0] + c * psi[..., 1]
    raw_p, raw_m = np.abs(plus) ** 2, np.abs(minus) ** 2
    total = raw_p + raw_m
    return raw_m / total, raw_p / total, raw_m, raw_p


def terminal_fidelities(config: EvolutionConfig) -> dict:
    """Integrate to the end time only and project onto the H0 eigenbasis there."""
    sol = _integrate(config)
    return _final_record(config, sol.t_end, sol.y_end)


def _final_record(config, t_end, psi):
    x, y, _, _ = kinematics(config.trajectory, t_end)
    phase = phase_at((float(x), float(y)))
    fm, fp, rm, rp = _fidelities(np.array(phase.phi), np.asarray(psi)[None, :])
    return {
        "t": float(t_end),
        "f_minus": float(fm[0]),
        "f_plus": float(fp[0]),
        "raw_minus": float(rm[0]),
        "raw_plus": float(rp[0]),
        "norm": float(np.linalg.norm(psi)),
    }


def propagate(config: EvolutionConfig) -> FidelitySeries:
    """Integrate i dPsi/dt = H(t) Psi and record biorthogonal fidelities.

    Samples sit at t_j = (j + 1/2) t_end / N so that none lands on the branch
    cut; the state at exactly ``t_end`` is reported in ``final``.
    """
    spec = config.trajectory
    n = max(2, int(round(config.output_samples * config.t_end / spec.period)))
    times = spec.t_start + (np.arange(n) + 0.5) * (config.t_end / n)
    sol = _integrate(config, times)
    smp = TrajectorySample(times, *kinematics(spec, times), *phidot_from(*kinematics(spec, times)))
    phi, alpha = phase_arrays(smp.x, smp.y)
    if np.any(np.isnan(alpha)):
        i = int(np.argmax(np.isnan(alpha)))
        raise OnCutError(float(smp.x[i]), float(smp.y[i]))
    fm, fp, rm, rp = _fidelities(phi, sol.y_eval)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(np.abs(alpha) < 1e-12, np.inf, np.abs(smp.phidot) / np.abs(4 * alpha))
        # <plus^|d/dt minus> = -phidot/2, omega_{+-} = E_- - E_+ = -2 alpha
        omega_pm = -2.0 * alpha
        accumulated = np.concatenate(
            [[0.0], np.cumsum(0.5 * (omega_pm[1:] + omega_pm[:-1]) * np.diff(times))]
        )
        summand = (np.abs(smp.phidot) / 2) / np.abs(omega_pm) * np.exp(1j * accumulated)
    return FidelitySeries(
        times=times,
        f_minus=fm,
        f_plus=fp,
        raw_minus=rm,
        raw_plus=rp,
        norm=np.linalg.norm(sol.y_eval, axis=1),
        eta=eta,
        eta_summand=summand,
        final=_final_record(config, sol.t_end, sol.y_end),
        psi_final=sol.y_end,
        config=config,
        stats=sol.stats,
        metadata={
            "fidelity": "normalized by the sum of both biorthogonal populations; raw values alongside",
            "eta": "excludes the phase factor exp(i int omega_nm); eta_summand includes it "
            "(accumulated from the first sample)",
            "sampling": "t_j = (j + 1/2) t_end / N",
        },
    )
