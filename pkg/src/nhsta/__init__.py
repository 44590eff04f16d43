"""Shortcut-to-adiabaticity state transfer in a time-modulated two-level non-Hermitian system."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BiorthoBasis,
    CDMode,
    ChartPoint,
    PhasePoint,
    eigensystem_general,
    eigensystem_h0,
    h0_at,
    h1_at,
    hm_at,
    phase_at,
)
from .trajectory import TrajectorySample, TrajectorySpec, im_phidot_residual, sample, unwrap_phase  # noqa: E402
from .evolution import EvolutionConfig, FidelitySeries, adiabatic_frame, criterion_eta, propagate  # noqa: E402
