"""Two-level non-Hermitian model on the (x, y) chart.

The chart point (x, y) is mapped to a complex angle
``phi = arctan(1 / (x + iy))`` and a real scale ``alpha``; together they fix
the physical parameters (k, kappa, epsilon, delta) of

    H0 = (k + i kappa) sigma_x + (epsilon - i delta) sigma_z
       = alpha [[cos phi, sin phi], [sin phi, -cos phi]].

Operators are plain ``(2, 2)`` complex numpy arrays.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateError, OnCutError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# below this |sin phi_r| the quotient x sinh(phi_i) / sin(phi_r) is replaced by its limit
SIN_PHI_R_FLOOR = 1e-8


class CDMode(str, enum.Enum):
    """How the counter-diabatic coupling uses the complex rate phidot."""

    NONE = "none"
    REAL = "real"
    FULL = "full"

    @classmethod
    def parse(cls, value: Union[str, "CDMode"]) -> "CDMode":
        if isinstance(value, cls):
            return value
        aliases = {"real-part": "real", "re": "real"}
        value = aliases.get(str(value).lower(), str(value).lower())
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown cd mode {value!r}; expected none, real or full") from None


@dataclass(frozen=True)
class ChartPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"chart point must be finite, got ({self.x!r}, {self.y!r})")

    @property
    def on_cut(self) -> bool:
        return on_branch_cut(self.x, self.y)


PointLike = Union[ChartPoint, tuple]


def _as_point(p: PointLike) -> ChartPoint:
    if isinstance(p, ChartPoint):
        return p
    x, y = p
    return ChartPoint(float(x), float(y))


def on_branch_cut(x: float, y: float) -> bool:
    return x == 0.0 and 0.0 < abs(y) <= 1.0


@dataclass(frozen=True)
class PhasePoint:
    """Complex angle, scale and mapped physical parameters at one chart point.

    ``branch_offset`` counts the multiples of pi added to ``phi_r`` relative to
    the principal branch; every shift by pi flips the sign of ``alpha`` so that
    the operator built from the pair is unchanged.
    """

    phi_r: float
    phi_i: float
    alpha: float
    k: float
    kappa: float
    epsilon: float
    delta: float
    branch_offset: int = 0

    @property
    def phi(self) -> complex:
        return complex(self.phi_r, self.phi_i)

    def shifted(self, n: int = 1) -> "PhasePoint":
        sign = -1.0 if n % 2 else 1.0
        return PhasePoint(
            self.phi_r + n * math.pi,
            self.phi_i,
            sign * self.alpha,
            self.k,
            self.kappa,
            self.epsilon,
            self.delta,
            self.branch_offset + n,
        )


def alpha_from_phase(phi_r: float, phi_i: float, x: float) -> float:
    """Scale alpha = x sinh(phi_i) / sin(phi_r), continued through sin(phi_r) = 0.

    With cot(phi) = x + iy one has x = sin(phi_r) cos(phi_r) / (sinh^2 phi_i + sin^2 phi_r),
    so the quotient equals cos(phi_r) sinh(phi_i) / (sinh^2 phi_i + sin^2 phi_r),
    which is regular wherever phi != 0.
    """
    s = math.sin(phi_r)
    sh = math.sinh(phi_i)
    if abs(s) >= SIN_PHI_R_FLOOR:
        return x * sh / s
    return math.cos(phi_r) * sh / (sh * sh + s * s)


def principal_phase(x: float, y: float) -> complex:
    """Principal branch of arctan(1/(x+iy)) with real part in (-pi/2, pi/2]."""
    if x == 0.0 and y == 0.0:
        return complex(math.pi / 2, 0.0)
    phi = cmath.atan(1.0 / complex(x, y))
    if phi.real <= -math.pi / 2:
        phi = complex(phi.real + math.pi, phi.imag)
    return phi


def phase_at(p: PointLike) -> PhasePoint:
    """Map a chart point to its principal-branch phase and physical parameters."""
    p = _as_point(p)
    if p.on_cut:
        raise OnCutError(p.x, p.y)
    phi = principal_phase(p.x, p.y)
    alpha = alpha_from_phase(phi.real, phi.imag, p.x)
    ch, sh = math.cosh(phi.imag), math.sinh(phi.imag)
    sr, cr = math.sin(phi.real), math.cos(phi.real)
    return PhasePoint(
        phi_r=phi.real,
        phi_i=phi.imag,
        alpha=alpha,
        k=alpha * ch * sr,
        kappa=alpha * sh * cr,
        epsilon=alpha * ch * cr,
        delta=alpha * sh * sr,
    )


def h0_from_phase(phase: PhasePoint) -> np.ndarray:
    c = cmath.cos(phase.phi)
    s = cmath.sin(phase.phi)
    return phase.alpha * np.array([[c, s], [s, -c]], dtype=complex)


def h0_from_parameters(k: float, kappa: float, epsilon: float, delta: float) -> np.ndarray:
    """(k + i kappa) sigma_x + (epsilon - i delta) sigma_z."""
    return complex(k, kappa) * SIGMA_X + complex(epsilon, -delta) * SIGMA_Z


def h0_at(p: PointLike) -> np.ndarray:
    return h0_from_phase(phase_at(p))


@dataclass(frozen=True)
class BiorthoBasis:
    """Right eigenvectors, left partners (stored as kets) and eigenvalues.

    The bra of a left partner is ``left.conj()``, so the biorthogonal
    projection of a state is ``left.conj() @ psi``.
    """

    right_minus: np.ndarray
    right_plus: np.ndarray
    left_minus: np.ndarray
    left_plus: np.ndarray
    e_minus: complex
    e_plus: complex

    def overlaps(self) -> np.ndarray:
        """Matrix of <left_n | right_m> with n, m ordered (plus, minus)."""
        lefts = np.array([self.left_plus, self.left_minus]).conj()
        rights = np.array([self.right_plus, self.right_minus]).T
        return lefts @ rights

    def projector(self, which: str) -> np.ndarray:
        if which == "plus":
            return np.outer(self.right_plus, self.left_plus.conj())
        if which == "minus":
            return np.outer(self.right_minus, self.left_minus.conj())
        raise ValueError(f"which must be 'plus' or 'minus', got {which!r}")

    def closure(self) -> np.ndarray:
        return self.projector("plus") + self.projector("minus")

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        """Biorthogonal projections (<plus^|psi>, <minus^|psi>)."""
        return np.array([self.left_plus.conj() @ psi, self.left_minus.conj() @ psi])


def eigenbasis_from_phase(phase: PhasePoint) -> BiorthoBasis:
    half = phase.phi / 2
    c, s = cmath.cos(half), cmath.sin(half)
    cc, sc = cmath.cos(half.conjugate()), cmath.sin(half.conjugate())
    return BiorthoBasis(
        right_minus=np.array([-s, c]),
        right_plus=np.array([c, s]),
        left_minus=np.array([-sc, cc]),
        left_plus=np.array([cc, sc]),
        e_minus=complex(-phase.alpha),
        e_plus=complex(phase.alpha),
    )


def eigensystem_h0(p: PointLike) -> BiorthoBasis:
    """Closed-form biorthogonal eigensystem of H0, labelled by the principal branch."""
    return eigenbasis_from_phase(phase_at(p))


def h1_at(phidot: complex, mode: Union[CDMode, str]) -> np.ndarray:
    """Counter-diabatic term i [[0, -phidot/2], [phidot/2, 0]] = (phidot/2) sigma_y."""
    mode = CDMode.parse(mode)
    phidot = complex(phidot)
    if not cmath.isfinite(phidot):
        raise ValueError(f"phidot must be finite, got {phidot!r}")
    if mode is CDMode.NONE:
        return np.zeros((2, 2), dtype=complex)
    if mode is CDMode.REAL:
        phidot = complex(phidot.real, 0.0)
    return 0.5 * phidot * SIGMA_Y


def hm_at(p: PointLike, phidot: complex, mode: Union[CDMode, str]) -> np.ndarray:
    return h0_at(p) + h1_at(phidot, mode)


def _sort_key(e: complex) -> tuple:
    return (e.real, e.imag)


def eigensystem_general(h: np.ndarray) -> BiorthoBasis:
    """Closed-form left/right eigensystem of a 2x2 operator.

    ``e_plus`` is the eigenvalue with the larger real part (then larger
    imaginary part). Raises :class:`DegenerateError` near coalescence.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2) or not np.all(np.isfinite(h)):
        raise ValueError("expected a finite 2x2 operator")
    a, b, c, d = (complex(v) for v in h.ravel())
    scale = float(np.linalg.norm(h))
    half_trace = 0.5 * (a + d)
    split = cmath.sqrt((0.5 * (a - d)) ** 2 + b * c)
    if scale == 0.0 or 2.0 * abs(split) <= 1e-14 * scale:
        raise DegenerateError("eigenvalues coalesce (gap below 1e-14 * |h|)")
    e1, e2 = half_trace + split, half_trace - split
    e_plus, e_minus = (e1, e2) if _sort_key(e1) >= _sort_key(e2) else (e2, e1)

    def pair(lam: complex):
        r1, r2 = np.array([b, lam - a]), np.array([lam - d, c])
        right = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
        right = right / np.linalg.norm(right)
        u1, u2 = np.array([c, lam - a]), np.array([lam - d, b])
        row = u1 if np.linalg.norm(u1) >= np.linalg.norm(u2) else u2
        dot = row @ right
        if abs(dot) <= 1e-14 * np.linalg.norm(row):
            raise DegenerateError("left and right eigenvectors are (nearly) orthogonal")
        return right, (row / dot).conj()

    right_plus, left_plus = pair(e_plus)
    right_minus, left_minus = pair(e_minus)
    return BiorthoBasis(right_minus, right_plus, left_minus, left_plus, e_minus, e_plus)


# ---------------------------------------------------------------------------
# vectorized helpers (grids, oracles, batch checks)


def phase_arrays(x, y):
    """Principal phase and alpha over arrays; on-cut entries come back as NaN."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = x + 1j * y
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(z == 0, np.pi / 2 + 0j, np.arctan(1.0 / np.where(z == 0, 1.0, z)))
    phi = np.where(phi.real <= -np.pi / 2, phi + np.pi, phi)
    alpha = _alpha_arrays(phi, x)
    cut = (x == 0.0) & (np.abs(y) > 0.0) & (np.abs(y) <= 1.0)
    phi = np.where(cut, np.nan + 0j, phi)
    alpha = np.where(cut, np.nan, alpha)
    return phi, alpha


def _alpha_arrays(phi, x):
    s = np.sin(phi.real)
    sh = np.sinh(phi.imag)
    small = np.abs(s) < SIN_PHI_R_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = x * sh / np.where(small, 1.0, s)
        limit = np.cos(phi.real) * sh / (sh * sh + s * s)
    return np.where(small, limit, quotient)


def h0_parameter_arrays(x, y):
    """(k + i kappa, epsilon - i delta) over arrays.

    Both combinations are invariant under the branch shift, so points on the
    cut are evaluated from the x -> 0+ side instead of being rejected.
    """
    x = np.asarray(x, dtype=float)
    x = np.where(x == 0.0, 0.0, x)  # normalize -0.0
    y = np.asarray(y, dtype=float)
    z = x + 1j * y
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(z == 0, np.pi / 2 + 0j, np.arctan(1.0 / np.where(z == 0, 1.0, z)))
    alpha = _alpha_arrays(phi, x)
    return alpha * np.sin(phi), alpha * np.cos(phi)


def h0_arrays(x, y) -> np.ndarray:
    off, diag = h0_parameter_arrays(x, y)
    out = np.empty(np.shape(off) + (2, 2), dtype=complex)
    out[..., 0, 0] = diag
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    out[..., 1, 1] = -diag
    return out
