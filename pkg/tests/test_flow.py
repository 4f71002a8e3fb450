import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from merton_cournot.flow import (
    aux_coords, drift_jacobian, flow_abridged, flow_full, flow_jacobian, flow_ode_oracle, from_aux_coords,
    own_drift,
)
from merton_cournot.model import AuxState, GameState

finite = st.floats(-10, 10, allow_nan=False)
states = st.lists(finite, min_size=5, max_size=5).map(np.array)
qs = st.floats(-5, 5)
thetas = st.floats(0.1, 3)
investors = st.sampled_from([1, 2])


def test_known_values():
    y = GameState(10.0, 1.0, 2.0, 0.0, 0.0)
    out = flow_full(1.0, y, 1, 0.5)
    # S - theta q, pi - q, pi_opp, W - theta(pi q - q^2/2), W_opp - theta pi_opp q
    assert out == GameState(9.5, 0.0, 2.0, -0.25, -1.0)
    out2 = flow_full(1.0, y, 2, 0.5)
    assert out2 == GameState(9.5, 1.0, 1.0, -0.5, -0.75)


@settings(max_examples=50, deadline=None)
@given(states, qs, thetas, investors)
def test_matches_rk4(y, q, th, i):
    np.testing.assert_allclose(flow_full(q, y, i, th), flow_ode_oracle(q, y, i, th), rtol=0, atol=1e-8)


@given(states, qs, qs, thetas, investors)
def test_group_law(y, a, b, th, i):
    lhs = flow_full(a + b, y, i, th)
    rhs = flow_full(a, flow_full(b, y, i, th), i, th)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-10)


@given(states, thetas, investors)
def test_identity_at_zero(y, th, i):
    np.testing.assert_array_equal(flow_full(0.0, y, i, th), y)


@given(states, qs, thetas, investors)
def test_derivative_is_own_drift(y, q, th, i):
    h = 1e-6
    fd = (flow_full(q + h, y, i, th) - flow_full(q - h, y, i, th)) / (2 * h)
    np.testing.assert_allclose(fd, own_drift(flow_full(q, y, i, th), i, th), atol=1e-6)


@given(states, qs, thetas, investors)
def test_jacobian_matches_fd(y, q, th, i):
    J = flow_jacobian(q, i, th)
    h = 1e-6
    fd = np.column_stack([(flow_full(q, y + h * e, i, th) - flow_full(q, y - h * e, i, th)) / (2 * h)
                          for e in np.eye(5)])
    np.testing.assert_allclose(J, fd, atol=1e-7)


@pytest.mark.parametrize("i", [1, 2])
def test_drift_jacobian_nilpotent(i):
    B = drift_jacobian(i, 0.7)
    np.testing.assert_array_equal(B @ B, np.zeros((5, 5)))
    np.testing.assert_allclose(flow_jacobian(2.0, i, 0.7), np.eye(5) + 2.0 * B)


@given(states, qs, thetas, investors)
def test_aux_coords_constant_along_orbit(y, q, th, i):
    np.testing.assert_allclose(aux_coords(flow_full(q, y, i, th), i, th), aux_coords(y, i, th), atol=1e-9)


@given(states, thetas, investors)
def test_aux_coords_inverse(y, th, i):
    z = aux_coords(y, i, th)
    own = y[1] if i == 1 else y[2]
    np.testing.assert_allclose(from_aux_coords(z, own, i, th).as_array(), y, atol=1e-9)


@given(states, qs, thetas, investors)
def test_abridged_agrees_with_full(y, q, th, i):
    full = flow_full(q, y, i, th)
    own = y[1] if i == 1 else y[2]
    keep = [0, 2, 3, 4] if i == 1 else [0, 1, 4, 3]
    z = y[keep]
    np.testing.assert_allclose(flow_abridged(q, z, i, th, own), full[keep], atol=1e-9)


def test_batched_states():
    ys = np.arange(20.0).reshape(4, 5)
    out = flow_full(0.3, ys, 2, 1.0)
    for row, y in zip(out, ys):
        np.testing.assert_array_equal(row, flow_full(0.3, y, 2, 1.0))
    assert isinstance(aux_coords(GameState(*ys[0]), 1, 1.0), AuxState)
