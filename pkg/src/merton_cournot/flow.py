"""Integral flow generated by the own-trading drift.

The flow ``phi(q, y)`` solves ``d phi / dq = b(phi)``, ``phi(0, y) = y`` where
``b`` is the drift a unit of own selling adds to the game state.  Because ``b``
is affine with a nilpotent linear part, the flow is a quadratic polynomial in
``q`` and its Jacobian in ``y`` is exactly ``I + q B``.

Selling ``q`` shares instantaneously and frictionlessly moves the state from
``y`` to ``phi(q, y)``: the holding drops by ``q``, the price by ``theta q``.
"""

from __future__ import annotations

import numpy as np

from .model import AuxState, GameState, relative_index


def _as_global(y) -> np.ndarray:
    return y.as_array() if isinstance(y, GameState) else np.asarray(y, dtype=float)


def flow_full(q: float, y, investor: int, theta: float):
    """Transport the full game state along the flow of ``investor``.

    ``y`` may be a ``GameState`` or an array whose last axis holds the global
    coordinates ``(S, pi_1, pi_2, W_1, W_2)``.  The return type follows the
    input type.
    """
    a = _as_global(y)
    iS, ip, io, iW, iWo = relative_index(investor)
    out = np.array(a, dtype=float, copy=True)
    pi_own = a[..., ip]
    pi_opp = a[..., io]
    out[..., iS] = a[..., iS] - theta * q
    out[..., ip] = pi_own - q
    out[..., iW] = a[..., iW] - theta * (pi_own * q - 0.5 * q * q)
    out[..., iWo] = a[..., iWo] - theta * pi_opp * q
    return GameState.from_array(out) if isinstance(y, GameState) else out


def flow_abridged(q: float, z, investor: int, theta: float, pi_own: float):
    """Flow acting on the four coordinates that omit the own holding.

    The own holding is needed for the wealth coordinate and is passed in
    separately as ``pi_own``.  To invert, flow back with the transported
    holding: ``flow_abridged(-q, flow_abridged(q, z, i, th, p), i, th, p - q)``.
    """
    a = z.as_array() if isinstance(z, AuxState) else np.asarray(z, dtype=float)
    out = np.array(a, dtype=float, copy=True)
    out[..., 0] = a[..., 0] - theta * q
    out[..., 2] = a[..., 2] - theta * pi_own * q + 0.5 * theta * q * q
    out[..., 3] = a[..., 3] - theta * a[..., 1] * q
    return AuxState.from_array(out) if isinstance(z, AuxState) else out


def drift_jacobian(investor: int, theta: float) -> np.ndarray:
    """Constant Jacobian ``B`` of the own-trading drift, global ordering."""
    _, ip, io, iW, iWo = relative_index(investor)
    B = np.zeros((5, 5))
    B[iW, ip] = -theta
    B[iWo, io] = -theta
    return B


def flow_jacobian(q: float, investor: int, theta: float) -> np.ndarray:
    """Exact Jacobian of ``y -> phi(q, y)``; ``B @ B == 0`` so it is ``I + qB``."""
    return np.eye(5) + q * drift_jacobian(investor, theta)


def own_drift(y: np.ndarray, investor: int, theta: float) -> np.ndarray:
    """Drift ``b`` in global ordering, evaluated on a global state array."""
    _, ip, io, iW, iWo = relative_index(investor)
    out = np.zeros_like(y, dtype=float)
    out[..., 0] = -theta
    out[..., ip] = -1.0
    out[..., iW] = -theta * y[..., ip]
    out[..., iWo] = -theta * y[..., io]
    return out


def flow_ode_oracle(q: float, y, investor: int, theta: float, n_steps: int = 100):
    """Integrate ``d phi/dq = b(phi)`` numerically with classical RK4.

    Independent of the closed form in ``flow_full``; used to cross-check it.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    x = np.array(_as_global(y), dtype=float)
    h = q / n_steps
    for _ in range(n_steps):
        k1 = own_drift(x, investor, theta)
        k2 = own_drift(x + 0.5 * h * k1, investor, theta)
        k3 = own_drift(x + 0.5 * h * k2, investor, theta)
        k4 = own_drift(x + h * k3, investor, theta)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return GameState.from_array(x) if isinstance(y, GameState) else x


def aux_coords(y, investor: int, theta: float):
    """Auxiliary coordinates ``(P, pi_opp, w_own, w_opp)`` of a game state.

    ``P = S - theta pi``, ``w_own = W_own - theta pi^2 / 2`` and
    ``w_opp = W_opp - theta pi_opp pi`` with ``theta`` the investor's own
    impact coefficient.  These are constant along the flow orbits.
    """
    a = _as_global(y)
    iS, ip, io, iW, iWo = relative_index(investor)
    pi = a[..., ip]
    out = np.stack([
        a[..., iS] - theta * pi,
        a[..., io],
        a[..., iW] - 0.5 * theta * pi * pi,
        a[..., iWo] - theta * a[..., io] * pi,
    ], axis=-1)
    return AuxState.from_array(out) if isinstance(y, GameState) else out


def from_aux_coords(z, pi_own: float, investor: int, theta: float) -> GameState:
    """Inverse of ``aux_coords`` given the own holding."""
    a = z.as_array() if isinstance(z, AuxState) else np.asarray(z, dtype=float)
    P, pi_opp, w, wo = (float(v) for v in a)
    S = P + theta * pi_own
    W = w + 0.5 * theta * pi_own * pi_own
    Wo = wo + theta * pi_opp * pi_own
    g = np.empty(5)
    iS, ip, io, iW, iWo = relative_index(investor)
    g[iS], g[ip], g[io], g[iW], g[iWo] = S, pi_own, pi_opp, W, Wo
    return GameState.from_array(g)


__all__ = [
    "flow_full", "flow_abridged", "flow_jacobian", "drift_jacobian", "own_drift",
    "flow_ode_oracle", "aux_coords", "from_aux_coords",
]
