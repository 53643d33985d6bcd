import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ncts.trigger import (ATTACK_PATH, EVENT_PATH, TIME_PATH, TriggerError, deadzone,
                          event_release, primary_input, saturate)

vals = st.floats(-1e3, 1e3, allow_nan=False)


def test_saturation_examples():
    assert saturate([7.0], [5.0])[0] == 5.0
    assert saturate([-7.0], [5.0])[0] == -5.0
    assert saturate([3.0], [5.0])[0] == 3.0
    assert deadzone([7.0], [5.0])[0] == 2.0
    assert deadzone([3.0], [5.0])[0] == 0.0
    with pytest.raises(TriggerError):
        saturate([1.0, 2.0], [1.0])


def test_sector_bound_inside_operating_region(rng):
    # |u| <= xi / (1 - sqrt(eps)) keeps psi'psi <= eps u'u channelwise
    eps, xi = 0.2, np.array([5.0, 2.0])
    bound = xi / (1 - np.sqrt(eps))
    u = rng.uniform(-1, 1, size=(1000, 2)) * bound
    psi = np.array([deadzone(v, xi) for v in u])
    assert np.all(np.sum(psi ** 2, axis=1) <= eps * np.sum(u ** 2, axis=1) + 1e-12)
    # and outside it the bound fails, as recorded during simulation
    far = 10 * bound
    assert deadzone(far, xi) @ deadzone(far, xi) > eps * far @ far


def test_event_release_examples():
    W = np.eye(2)
    assert not event_release([0.3, 0], [1, 0], W, 0.16).released
    assert event_release([0.5, 0], [1, 0], W, 0.16).released
    assert not event_release([0, 0], [4, 2], W, 0.5).released


def test_event_release_tie_keeps():
    d = event_release([0.5, 0], [1, 0], np.eye(2), 0.25)
    assert d.error_norm_sq == d.threshold and not d.released


def test_event_release_rejects_bad_w():
    with pytest.raises(TriggerError):
        event_release([1, 0], [1, 0], np.diag([1.0, -1.0]), 0.1)
    with pytest.raises(TriggerError):
        event_release([1, 0], [1, 0], np.eye(2), 1.0)


def test_primary_input_examples():
    f = np.array([9.0, 9.0])
    for a in (0, 1):
        s = primary_input(a, 1, [1, 1], [2, 2], [0, 0], f)
        assert s.source == ATTACK_PATH and np.array_equal(s.value, f)
    s = primary_input(1, 0, [1, 3], [2, 2], [0, 0], f)
    assert s.source == TIME_PATH and np.array_equal(s.value, [1, 3])
    s = primary_input(0, 0, [0, 0], [1, 2], [0.1, 0], f)
    assert s.source == EVENT_PATH and np.allclose(s.value, [1.1, 2.0])
    with pytest.raises(TriggerError):
        primary_input(0, 0, [0], [1, 2], [0.1, 0], f)


def _no_float_solution(u, s):
    # the halfway-tie case: s + d never rounds to u for any float d
    d = u - s
    near = {np.nextafter(d, -np.inf), d, np.nextafter(d, np.inf)}
    return all(s + c != u for c in near)


@given(arrays(float, 3, elements=vals), arrays(float, 3, elements=st.floats(0.01, 100)))
def test_sat_plus_deadzone_is_identity(u, xi):
    s, psi = saturate(u, xi), deadzone(u, xi)
    assert np.max(np.abs(s)) <= xi.max()
    for i in range(3):
        if abs(u[i]) <= 2 * xi[i]:
            assert s[i] + psi[i] == u[i]  # Sterbenz range: always exact
        elif s[i] + psi[i] != u[i]:
            assert _no_float_solution(u[i], s[i])


def test_saturation_identity_tie_case():
    # exact sum falls halfway between floats and rounds away from u
    u, xi = -0.17849032772124415, 0.03258117138568607
    s, psi = saturate([u], [xi])[0], deadzone([u], [xi])[0]
    assert _no_float_solution(u, s)
    assert abs(s + psi - u) <= np.spacing(abs(u))


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.floats(0, 0.99))
def test_release_invariant_under_w_scaling(seed, c, mu):
    g = np.random.default_rng(seed)
    a = g.normal(size=(2, 2))
    W = a @ a.T + 0.1 * np.eye(2)
    e, x = g.normal(size=2), g.normal(size=2)
    # skip draws sitting on the tie within rounding
    assume(abs(e @ W @ e - mu * x @ W @ x) > 1e-9 * (1 + e @ W @ e))
    assert event_release(e, x, W, mu).released == event_release(e, x, c * W, mu).released


@given(st.integers(0, 2**32 - 1))
def test_mu_zero_releases_any_error(seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=(3, 3))
    e = g.normal(size=3)
    assume(np.any(e != 0))
    assert event_release(e, g.normal(size=3), a @ a.T + np.eye(3), 0.0).released


@given(st.integers(0, 1), st.integers(0, 1))
def test_source_consistent_with_draws(a, b):
    s = primary_input(a, b, [1.0], [2.0], [0.5], [3.0])
    expect = ATTACK_PATH if b else (TIME_PATH if a else EVENT_PATH)
    assert s.source == expect and (s.alpha, s.beta) == (a, b)
