from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncts.analysis import (LEMMAS, AnalysisError, LkfWeights, dissipativity_index, lemma_gap,
                           lkf_value, supply_rate)
from ncts.model import DissipativityTriple

from lemma_draws import draw

TRIPLE = DissipativityTriple(np.array([[-0.8]]), np.array([[-0.8]]), np.array([[1.5]]), 0.1)


def synthetic(t, y, w, **kw):
    return SimpleNamespace(t=np.asarray(t, float), y1=np.asarray(y, float),
                           w=np.asarray(w, float), **kw)


# ---------------------------------------------------------------- dissipativity

def test_constant_input_scalar_check():
    t = np.linspace(0, 1, 101)
    rep = dissipativity_index(synthetic(t, np.zeros((101, 1)), np.ones((101, 1))), TRIPLE)
    assert rep.terminal == pytest.approx(1.4, abs=1e-12)
    assert rep.J[0] == 0.0 and rep.ok


def test_zero_supply():
    t = np.linspace(0, 2, 51)
    rep = dissipativity_index(synthetic(t, np.zeros((51, 1)), np.zeros((51, 1))), TRIPLE)
    assert np.all(rep.J == 0.0)
    y = np.sin(t)[:, None]
    rep = dissipativity_index(synthetic(t, y, np.zeros((51, 1))), TRIPLE)
    assert np.all(np.diff(rep.J) <= 0)


def test_violation_times_and_flag():
    t = np.linspace(0, 1, 11)
    rep = dissipativity_index(synthetic(t, np.ones((11, 1)), np.zeros((11, 1)),
                                        x1=np.ones((11, 2))), TRIPLE)
    assert not rep.ok and rep.violations[0] == pytest.approx(0.1)
    assert rep.nonzero_initial
    doc = rep.to_dict()
    assert doc["gamma"] == 0.1


def test_supply_rate_formula(rng):
    y, w = rng.normal(size=(5, 1)), rng.normal(size=(5, 1))
    expect = -0.8 * y[:, 0] ** 2 + 2 * (-0.8) * y[:, 0] * w[:, 0] + (1.5 - 0.1) * w[:, 0] ** 2
    assert np.allclose(supply_rate(y, w, TRIPLE), expect)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 60))
def test_index_additive(seed, split):
    g = np.random.default_rng(seed)
    t = np.sort(g.uniform(0, 5, 64))
    t = np.unique(t)
    split = min(split, t.size - 2)
    y, w = g.normal(size=(t.size, 1)), g.normal(size=(t.size, 1))
    whole = dissipativity_index(synthetic(t, y, w), TRIPLE).terminal
    left = dissipativity_index(synthetic(t[:split + 1], y[:split + 1], w[:split + 1]), TRIPLE)
    right = dissipativity_index(synthetic(t[split:], y[split:], w[split:]), TRIPLE)
    assert whole == pytest.approx(left.terminal + right.terminal, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------- LKF

def const_trace(c1, c2, T=3.0, n=301):
    t = np.linspace(0, T, n)
    return SimpleNamespace(t=t, x1=np.tile(c1, (n, 1)), x2=np.tile(c2, (n, 1)), meta={})


def test_lkf_zero_trace(case1_model):
    tr = const_trace(np.zeros(2), np.zeros(2))
    assert lkf_value(tr, LkfWeights.identity(2, 2), 2.0, case1_model) == 0.0


def test_lkf_constant_closed_form(case1_model):
    m = case1_model
    c1, c2 = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    tr = const_trace(c1, c2)
    v = lkf_value(tr, LkfWeights.identity(2, 2), 2.0, m, theta=0.3)
    # V1 = |c1|^2 + c2' E c2; V2 = (zeta2 + d2 + tau2)|c1|^2 + (theta + theta_bar)|c2|^2;
    # V3 = 0 and the Z2 term vanish; V4 = theta_bar^2 / 2 |c2|^2
    n1, n2 = c1 @ c1, c2 @ c2
    expect = (n1 + c2[0] ** 2 + (m.zeta2 + m.d2 + m.tau2) * n1 + (0.3 + m.theta_bar) * n2
              + m.theta_bar ** 2 / 2 * n2)
    assert v == pytest.approx(expect, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0))
def test_lkf_time_shift_invariant(t1, t2):
    from conftest import preset
    from ncts.model import model_from_dict

    m = model_from_dict(preset("case1")["model"])
    tr = const_trace(np.array([0.3, -1.0]), np.array([2.0, 1.0]))
    t1, t2 = round(t1, 2), round(t2, 2)
    w = LkfWeights.identity(2, 2)
    assert lkf_value(tr, w, t1, m) == pytest.approx(lkf_value(tr, w, t2, m), rel=1e-12)


def test_lkf_rejects_early_time(case1_model):
    tr = const_trace(np.ones(2), np.ones(2))
    with pytest.raises(AnalysisError):
        lkf_value(tr, LkfWeights.identity(2, 2), 0.2, case1_model)
    with pytest.raises(AnalysisError):
        lkf_value(tr, LkfWeights.identity(2, 2), 9.0, case1_model)


def test_lkf_windowed_median_decreases(case_docs, case1_model, certificates):
    from ncts.simulator import Scenario, run

    cert = certificates["case1"]
    tr = run(case1_model, cert, Scenario.from_dict(case_docs["case1"]["scenario"], seed=0))
    w = LkfWeights.from_decision(cert.decision)
    times = tr.t[(tr.t > 5.0 - 1e-9)]
    vals = np.array([lkf_value(tr, w, t, case1_model) for t in times])
    assert np.all(vals >= 0)
    med = [np.median(vals[(times >= a) & (times < a + 1.0)]) for a in np.arange(5.0, 15.0, 1.0)]
    assert np.all(np.diff(med) <= 0)


# ---------------------------------------------------------------- lemmas

def test_jensen_equality_constant():
    gap = lemma_gap("jensen", {"W1": np.eye(2), "a": 0.0, "b": 1.0,
                               "x": lambda s: np.tile([1.0, -2.0], (s.size, 1))})
    assert abs(gap) <= 1e-10


@pytest.mark.parametrize("lemma", ["wirtinger_split", "wirtinger_pi"])
def test_wirtinger_equality_linear(lemma):
    c0, c1 = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
    gap = lemma_gap(lemma, {"R": np.diag([1.0, 2.0]), "a": -1.0, "b": 2.0,
                            "x": lambda s: c0 + np.outer(s, c1),
                            "xdot": lambda s: np.tile(c1, (s.size, 1))})
    assert abs(gap) <= 1e-10


def test_schur_agreement(rng):
    for _ in range(50):
        assert lemma_gap("schur", draw("schur", rng)) == 0.0


def test_norm_bound_direct(rng):
    inp = draw("norm_bound", rng)
    inp["eps"] = 1.0
    M, N, F = inp["M"], inp["N"], inp["F"]
    X = M @ M.T + N.T @ N - M @ F @ N - (M @ F @ N).T
    assert lemma_gap("norm_bound", inp) == pytest.approx(np.linalg.eigvalsh(X)[0])
    assert lemma_gap("norm_bound", inp) >= -1e-12


def test_lemma_errors():
    with pytest.raises(AnalysisError):
        lemma_gap("cauchy", {})
    with pytest.raises(AnalysisError):
        lemma_gap("jensen", {"W1": np.eye(1), "a": 1.0, "b": 0.0, "x": np.sin})
    with pytest.raises(AnalysisError):
        lemma_gap("recip_convex", {"R": np.eye(1), "M": 5 * np.eye(1), "theta": 0.5})
    with pytest.raises(AnalysisError):
        lemma_gap("norm_bound", {"M": np.eye(1), "N": np.eye(1), "F": 2 * np.eye(1)})


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(LEMMAS), st.integers(0, 2**32 - 1))
def test_lemma_gaps_nonnegative(lemma, seed):
    assert lemma_gap(lemma, draw(lemma, np.random.default_rng(seed))) >= -1e-8
