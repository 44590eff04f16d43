import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from nhsta.errors import StepSizeError
from nhsta.integrate import dopri5, expm2, ordered_product, piecewise_exponential

entries = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@given(st.lists(entries, min_size=4, max_size=4))
def test_expm2_matches_scipy(vals):
    m = np.array(vals).reshape(2, 2)
    ref = scipy.linalg.expm(m)
    np.testing.assert_allclose(expm2(m), ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


def test_expm2_nilpotent_and_batch():
    n = np.array([[0, 1], [0, 0]], dtype=complex)
    np.testing.assert_allclose(expm2(n), np.eye(2) + n)
    stack = np.stack([n, -1j * np.pi * np.diag([1, -1])])
    out = expm2(stack)
    np.testing.assert_allclose(out[1], -np.eye(2), atol=1e-15)
    assert out.shape == (2, 2, 2)


def test_ordered_product_order(rng):
    mats = rng.normal(size=(7, 2, 2)) + 1j * rng.normal(size=(7, 2, 2))
    ref = np.eye(2, dtype=complex)
    for m in mats:
        ref = m @ ref
    np.testing.assert_allclose(ordered_product(mats), ref, rtol=1e-12)


def test_dopri5_linear_scalar():
    lam = -0.3 + 2.0j
    t_eval = np.linspace(0, 5, 37)
    sol = dopri5(lambda t, y: lam * y, 0.0, 5.0, [1.0], rtol=1e-10, atol=1e-12, t_eval=t_eval)
    np.testing.assert_allclose(sol.y_eval[:, 0], np.exp(lam * t_eval), atol=1e-8)
    assert sol.y_end[0] == pytest.approx(np.exp(5 * lam), abs=1e-9)
    assert sol.t_end == 5.0
    assert sol.stats.accepted > 0


def test_dopri5_time_dependent_backward():
    # y' = i t y, y(t) = exp(i t^2 / 2)
    sol = dopri5(lambda t, y: 1j * t * y, 2.0, 0.0, [np.exp(2j)], rtol=1e-11, atol=1e-13)
    assert sol.y_end[0] == pytest.approx(1.0, abs=1e-9)


def test_dopri5_on_step_can_abort():
    class Stop(Exception):
        pass

    def hook(t, y):
        if t > 1.0:
            raise Stop

    with pytest.raises(Stop):
        dopri5(lambda t, y: y, 0.0, 3.0, [1.0], on_step=hook)


def test_dopri5_step_underflow():
    with pytest.raises(StepSizeError):
        dopri5(lambda t, y: y * y, 0.0, 2.0, [1.0 + 0j])


def test_piecewise_constant_generator():
    h = np.array([[0.3, 1.0 - 0.2j], [1.0 + 0.2j, -0.3]])
    psi0 = np.array([1.0, 0.0])

    def batch(ts):
        return np.broadcast_to(h, (len(ts), 2, 2))

    out = piecewise_exponential(batch, 0.0, 2.0, psi0, slices=64)
    np.testing.assert_allclose(out, scipy.linalg.expm(-2j * h) @ psi0, atol=1e-12)
