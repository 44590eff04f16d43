import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhsta.errors import DegenerateError, OnCutError
from nhsta.model import (
    CDMode,
    ChartPoint,
    PhasePoint,
    alpha_from_phase,
    eigenbasis_from_phase,
    eigensystem_general,
    eigensystem_h0,
    h0_arrays,
    h0_at,
    h0_from_parameters,
    h0_from_phase,
    h0_parameter_arrays,
    h1_at,
    hm_at,
    phase_arrays,
    phase_at,
)

from conftest import off_cut_points


def eig2(h):
    """Eigenvalues of a 2x2 matrix from the characteristic polynomial."""
    a, b, c, d = h.ravel()
    disc = cmath.sqrt((a - d) ** 2 / 4 + b * c)
    return (a + d) / 2 - disc, (a + d) / 2 + disc


def test_exceptional_line_is_zero():
    p = phase_at((1.0, 0.0))
    assert p.phi_i == 0.0
    assert p.alpha == 0.0
    assert (p.k, p.kappa, p.epsilon, p.delta) == (0.0, 0.0, 0.0, 0.0)
    assert np.all(h0_at((1.0, 0.0)) == 0)


def test_imaginary_axis_limit():
    p = phase_at((0.0, 2.0))
    assert p.alpha == pytest.approx(-math.sqrt(3), abs=1e-12)
    # one-sided limits through the generic quotient x sinh(phi_i) / sin(phi_r)
    for x in (1e-6, -1e-6):
        phi = cmath.atan(1 / complex(x, 2.0))
        side = x * math.sinh(phi.imag) / math.sin(phi.real)
        assert side == pytest.approx(-math.sqrt(3), abs=1e-5)
    assert p.k == pytest.approx(0.0, abs=1e-15)
    assert p.delta == pytest.approx(0.0, abs=1e-15)


@given(st.floats(1.001, 50.0), st.sampled_from([1.0, -1.0]))
def test_alpha_on_imaginary_axis(y, sign):
    # phi = -i artanh(1/y) there, so alpha = 1/sinh(phi_i) = -sign(y) sqrt(y^2 - 1)
    assert phase_at((0.0, sign * y)).alpha == pytest.approx(-sign * math.sqrt(y * y - 1), rel=1e-9)


@pytest.mark.parametrize("y", [0.5, 1.0, -1.0, -0.25, 1e-9])
def test_cut_points_rejected(y):
    with pytest.raises(OnCutError):
        phase_at((0.0, y))


@pytest.mark.parametrize("xy", [(0.0, 1.5), (0.0, -3.0), (1e-300, 0.5), (0.0, 0.0)])
def test_points_off_cut_accepted(xy):
    p = phase_at(xy)
    assert math.isfinite(p.alpha)


def test_non_finite_coordinates():
    with pytest.raises(ValueError):
        ChartPoint(float("nan"), 1.0)
    with pytest.raises(ValueError):
        phase_at((1.0, float("inf")))


@given(off_cut_points())
def test_principal_branch_range(p):
    ph = phase_at(p)
    assert -math.pi / 2 < ph.phi_r <= math.pi / 2
    assert cmath.isclose(1 / cmath.tan(ph.phi), complex(p.x, p.y), rel_tol=1e-9, abs_tol=1e-9)


@given(off_cut_points())
def test_parameter_identity(p):
    ph = phase_at(p)
    lhs = ph.alpha**2
    rhs = complex(ph.k, ph.kappa) ** 2 + complex(ph.epsilon, -ph.delta) ** 2
    assert abs(lhs - rhs) < 1e-10 * (1 + ph.alpha**2)


@given(off_cut_points())
def test_two_assemblies_agree(p):
    ph = phase_at(p)
    a = h0_from_phase(ph)
    b = h0_from_parameters(ph.k, ph.kappa, ph.epsilon, ph.delta)
    assert np.max(np.abs(a - b)) < 1e-10 * (1 + abs(ph.alpha))


@given(off_cut_points(), st.integers(-3, 3))
def test_branch_shift_invariance(p, n):
    ph = phase_at(p)
    np.testing.assert_allclose(
        h0_from_phase(ph.shifted(n)), h0_from_phase(ph), atol=1e-12 * (1 + abs(ph.alpha))
    )
    assert ph.shifted(n).branch_offset == n


@given(off_cut_points())
def test_alpha_regular_formula_matches_quotient(p):
    ph = phase_at(p)
    if abs(math.sin(ph.phi_r)) > 1e-3:
        regular = math.cos(ph.phi_r) * math.sinh(ph.phi_i) / (
            math.sinh(ph.phi_i) ** 2 + math.sin(ph.phi_r) ** 2
        )
        assert regular == pytest.approx(ph.alpha, rel=1e-9, abs=1e-12)


def test_alpha_continuous_across_sin_floor():
    def x_of(phi_r, phi_i):
        s = math.sin(phi_r)
        return s * math.cos(phi_r) / (math.sinh(phi_i) ** 2 + s * s)

    phi_i = -0.4
    below = alpha_from_phase(1e-9, phi_i, x_of(1e-9, phi_i))
    above = alpha_from_phase(1e-7, phi_i, x_of(1e-7, phi_i))
    assert below == pytest.approx(above, rel=1e-9)
    assert below == pytest.approx(1 / math.sinh(phi_i), rel=1e-9)


@given(off_cut_points())
def test_biorthonormal_and_closed(p):
    basis = eigensystem_h0(p)
    np.testing.assert_allclose(basis.overlaps(), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(basis.closure(), np.eye(2), atol=1e-12)


@given(off_cut_points())
def test_eigen_residual(p):
    ph = phase_at(p)
    h = h0_from_phase(ph)
    basis = eigenbasis_from_phase(ph)
    scale = 1 + abs(ph.alpha)
    for vec, e in ((basis.right_plus, basis.e_plus), (basis.right_minus, basis.e_minus)):
        assert np.max(np.abs(h @ vec - e * vec)) < 1e-10 * scale * np.max(np.abs(vec))
    for vec, e in ((basis.left_plus, basis.e_plus), (basis.left_minus, basis.e_minus)):
        bra = vec.conj()
        assert np.max(np.abs(bra @ h - e * bra)) < 1e-10 * scale * np.max(np.abs(vec))


def test_eigenvectors_at_zero_phase():
    basis = eigenbasis_from_phase(PhasePoint(0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0))
    np.testing.assert_allclose(basis.right_plus, [1, 0])
    np.testing.assert_allclose(basis.right_minus, [0, 1])
    assert basis.e_plus == 1.0 and basis.e_minus == -1.0


def test_coefficients_reconstruct_state():
    basis = eigensystem_h0((0.4, 0.7))
    psi = np.array([0.3 - 0.2j, 1.1 + 0.5j])
    cp, cm = basis.coefficients(psi)
    np.testing.assert_allclose(cp * basis.right_plus + cm * basis.right_minus, psi, atol=1e-13)


def test_cd_term_modes():
    assert np.all(h1_at(0.0, "real") == 0)
    h = h1_at(0.2, CDMode.REAL)
    np.testing.assert_allclose(h, [[0, -0.1j], [0.1j, 0]])
    np.testing.assert_allclose(h, h.conj().T)
    full = h1_at(0.2 + 0.1j, "full")
    assert not np.allclose(full, full.conj().T)
    np.testing.assert_allclose(h1_at(0.2 + 0.1j, "real"), h)
    assert np.all(h1_at(0.2, "none") == 0)
    assert CDMode.parse("real-part") is CDMode.REAL


def test_cd_term_rejects_bad_input():
    with pytest.raises(ValueError):
        h1_at(0.1, "imaginary")
    with pytest.raises(ValueError):
        h1_at(complex("nan"), "real")


def test_modified_spectrum_example():
    h = hm_at((0.0, 2.0), 0.2, "real")
    lo, hi = eig2(h)
    assert hi.real == pytest.approx(math.sqrt(3.01), abs=1e-12)
    assert lo.real == pytest.approx(-math.sqrt(3.01), abs=1e-12)
    basis = eigensystem_general(h)
    assert basis.e_plus == pytest.approx(hi, abs=1e-12)
    np.testing.assert_array_equal(hm_at((0.3, 0.8), 0.5, "none"), h0_at((0.3, 0.8)))


def test_general_eigensystem_matches_h0():
    p = (0.35, -0.8)
    closed = eigensystem_h0(p)
    general = eigensystem_general(h0_at(p))
    for which in ("plus", "minus"):
        np.testing.assert_allclose(general.projector(which), closed.projector(which), atol=1e-12)


matrix_entries = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(st.lists(matrix_entries, min_size=4, max_size=4))
def test_general_eigensystem_residual(entries):
    h = np.array(entries, dtype=complex).reshape(2, 2)
    try:
        basis = eigensystem_general(h)
    except DegenerateError:
        return
    e_lo, e_hi = eig2(h)
    gap = abs(e_hi - e_lo)
    if gap < 1e-6 * (1 + np.linalg.norm(h)):
        return  # ill-conditioned, residual bounds do not apply
    scale = 1 + np.linalg.norm(h)
    for vec, e in ((basis.right_plus, basis.e_plus), (basis.right_minus, basis.e_minus)):
        assert np.linalg.norm(h @ vec - e * vec) < 1e-9 * scale * np.linalg.norm(vec)
    np.testing.assert_allclose(basis.overlaps(), np.eye(2), atol=1e-6 * scale / gap)


@pytest.mark.parametrize("h", [np.zeros((2, 2)), np.array([[0, 1], [0, 0]]), np.eye(2)])
def test_general_eigensystem_degenerate(h):
    with pytest.raises(DegenerateError):
        eigensystem_general(h)


def test_vector_helpers_match_scalar(rng):
    x = rng.uniform(-3, 3, 200)
    y = rng.uniform(-3, 3, 200)
    phi, alpha = phase_arrays(x, y)
    mats = h0_arrays(x, y)
    for i in range(x.size):
        ph = phase_at((x[i], y[i]))
        assert phi[i] == pytest.approx(ph.phi, abs=1e-12)
        assert alpha[i] == pytest.approx(ph.alpha, rel=1e-10, abs=1e-12)
        np.testing.assert_allclose(mats[i], h0_from_phase(ph), atol=1e-10)


def test_vector_helpers_on_cut():
    phi, alpha = phase_arrays([0.0, 0.0], [0.5, 2.0])
    assert np.isnan(phi[0]) and np.isnan(alpha[0])
    assert alpha[1] == pytest.approx(-math.sqrt(3))
    off, diag = h0_parameter_arrays([0.0, 1e-12], [0.5, 0.5])
    assert off[0] == pytest.approx(off[1], abs=1e-9)
    assert diag[0] == pytest.approx(diag[1], abs=1e-9)
