"""Saturation, dead-zone, event-trigger test and attacked controller input."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TriggerError",
    "TriggerDecision",
    "ControllerInputSample",
    "saturate",
    "deadzone",
    "event_release",
    "primary_input",
    "TIME_PATH",
    "EVENT_PATH",
    "ATTACK_PATH",
]

TIME_PATH = "time_path"
EVENT_PATH = "event_path"
ATTACK_PATH = "attack_path"


class TriggerError(ValueError):
    pass


@dataclass(frozen=True)
class TriggerDecision:
    released: bool
    error_norm_sq: float
    threshold: float


@dataclass(frozen=True)
class ControllerInputSample:
    value: np.ndarray
    source: str
    alpha: int
    beta: int


def _pair(u, limits):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lim = np.atleast_1d(np.asarray(limits, dtype=float))
    if u.shape != lim.shape:
        raise TriggerError(f"input has shape {u.shape}, limits have shape {lim.shape}")
    if np.any(lim <= 0):
        raise TriggerError("saturation limits must be positive")
    return u, lim


def saturate(u, limits) -> np.ndarray:
    """Clamp each channel to ``[-limit, limit]``."""
    u, lim = _pair(u, limits)
    return np.clip(u, -lim, lim)


def deadzone(u, limits) -> np.ndarray:
    """Dead-zone part ``u - sat(u)``; zero inside the linear region."""
    u, lim = _pair(u, limits)
    return exact_remainder(u, np.clip(u, -lim, lim))


def exact_remainder(u, s) -> np.ndarray:
    """``u - s`` chosen so that ``s + result == u`` in floating point.

    Plain subtraction already satisfies this when ``s`` and ``u`` are within
    a factor of two (Sterbenz); elsewhere the rounded difference is moved by
    an ulp when that restores the sum.  The one case with no solution is a
    halfway tie that rounds to the even neighbour of an odd ``u``.
    """
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    psi = u - s
    for _ in range(2):
        miss = (s + psi) != u
        if not miss.any():
            break
        up = np.where(s + psi < u, np.inf, -np.inf)
        psi = np.where(miss, np.nextafter(psi, up), psi)
    return psi


def event_release(e_k, x_sampled, W, mu: float) -> TriggerDecision:
    """Quadratic event-trigger test.

    Releases when ``e' W e > mu * x' W x``.  Equality keeps the packet.
    """
    e = np.atleast_1d(np.asarray(e_k, dtype=float))
    x = np.atleast_1d(np.asarray(x_sampled, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape != (e.size, e.size) or x.shape != e.shape:
        raise TriggerError("dimension mismatch between e_k, x and W")
    if not 0.0 <= mu < 1.0:
        raise TriggerError(f"mu must lie in [0, 1), got {mu}")
    if np.max(np.abs(W - W.T)) > 1e-12 * max(1.0, np.max(np.abs(W))):
        raise TriggerError("W must be symmetric")
    try:
        np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        raise TriggerError("W must be positive definite") from None
    lhs = float(e @ W @ e)
    rhs = float(mu * (x @ W @ x))
    return TriggerDecision(lhs > rhs, lhs, rhs)


def primary_input(alpha: int, beta: int, x_time_path, x_event_path, e_k,
                  f_delayed) -> ControllerInputSample:
    """Controller-side input under the mixed trigger and random attack.

    ``beta = 1`` replaces the measurement by the attack sample; otherwise
    ``alpha`` selects the time-triggered sample or the event path, which
    carries the last released packet ``x_event_path + e_k``.
    """
    if alpha not in (0, 1) or beta not in (0, 1):
        raise TriggerError("alpha and beta must be 0 or 1")
    vecs = [np.atleast_1d(np.asarray(v, dtype=float))
            for v in (x_time_path, x_event_path, e_k, f_delayed)]
    if len({v.shape for v in vecs}) != 1:
        raise TriggerError("all primary-input vectors must share one dimension")
    xt, xe, e, f = vecs
    if beta == 1:
        return ControllerInputSample(f.copy(), ATTACK_PATH, alpha, beta)
    if alpha == 1:
        return ControllerInputSample(xt.copy(), TIME_PATH, alpha, beta)
    return ControllerInputSample(xe + e, EVENT_PATH, alpha, beta)
