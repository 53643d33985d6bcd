import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncts.lmi import (NEG, PSD, AssemblyError, Constraint, LmiSystem, SynthesisScalars,
                      VarRegistry, build_theorem1, build_theorem2, parameterize_X2)
from ncts.lmi.assembly import OMEGA_SYMBOLS, _Builder
from ncts.lmi.sdpa import MAX_EIG, SdpaError, export_sdpa, parse_sdpa, to_sdpa_problem
from ncts.numerics import BlockLayout, read_block

from conftest import FIXTURES

# independent hand count for n1 = n2 = 2, m = q = qy = 1:
# 13 x-blocks of 2, five x2-blocks of 2, e_k 2, f 2, psi 1, w 1,
# border 3*2 + 4*2 + 4*1 + 2 + 1
THEOREM1_DIM = 26 + 10 + 2 + 2 + 1 + 1 + (6 + 8 + 4 + 2 + 1)
THEOREM2_DIM = THEOREM1_DIM + 16


@pytest.fixture(scope="module")
def systems(case1_model):
    return build_theorem1(case1_model, G=case1_model.fault.G0), build_theorem2(case1_model)


def test_main_dimensions(systems):
    t1, t2 = systems
    assert THEOREM1_DIM == 63 and THEOREM2_DIM == 79
    assert t1.constraint("omega").dim == 63
    assert t2.constraint("lambda").dim == 79
    assert len(t2.constraint("lambda").layout) - len(t1.constraint("omega").layout) == 16


def test_reciprocal_convexity_blocks(systems):
    for sys_ in systems:
        rc = [c for c in sys_.constraints if c.name.startswith("recip_convex")]
        assert len(rc) == 3
        assert all(c.dim == 8 and c.sense == PSD for c in rc)


def test_zero_assignment_is_constant_part(systems):
    for sys_ in systems:
        for c in sys_.constraints:
            const = c.compile()[0]
            a = c.evaluate(np.zeros(sys_.nvars))
            assert np.array_equal(a, const)
            assert np.array_equal(a, c.evaluate(np.zeros(sys_.nvars)))


def test_every_table_symbol_is_mapped(case1_model):
    b = _Builder(case1_model, case1_model.fault.G0, SynthesisScalars())
    b.variables()
    b.omega_constraint("omega")
    b.check_symbols(OMEGA_SYMBOLS)
    with pytest.raises(AssemblyError, match="Omega_check\\[99,99\\]"):
        b.check_symbols(list(OMEGA_SYMBOLS) + ["Omega_check[99,99]"])


def _only(sys_, **vals):
    x = np.zeros(sys_.nvars)
    labels = sys_.registry.labels
    for name, v in vals.items():
        x[labels.index(name)] = v
    return x


def test_block_14_terms(systems, case1_model):
    t1, t2 = systems
    lay = t2.constraint("lambda").layout
    # Y2 alone: He(B2 Y2)
    x = _only(t2, **{"Y2[0,0]": 1.0})
    blk = read_block(lay, t2.constraint("lambda").evaluate(x), 14, 14)
    Y2 = np.array([[1.0, 0.0]])
    B2Y2 = case1_model.B2 @ Y2
    assert np.allclose(blk - read_block(lay, t2.constraint("lambda").evaluate(0 * x), 14, 14),
                       B2Y2 + B2Y2.T)
    # Z2 alone: -(1 + pi^2/4) E'Z2E
    x = _only(t2, **{"Z2[0,0]": 1.0})
    blk = read_block(lay, t2.constraint("lambda").evaluate(x), 14, 14)
    blk0 = read_block(lay, t2.constraint("lambda").evaluate(0 * x), 14, 14)
    E = case1_model.E
    assert np.allclose(blk - blk0, -(1 + np.pi ** 2 / 4) * E.T @ np.diag([1.0, 0]) @ E)


def test_theta_matches_known_fault_block(systems, rng):
    t1, t2 = systems
    c1, c2 = t1.constraint("omega"), t2.constraint("lambda")
    x = rng.normal(size=t2.nvars)
    names1 = t1.registry.labels
    x1 = np.array([x[t2.registry.labels.index(n)] for n in names1])
    a1, a2 = c1.evaluate(x1), c2.evaluate(x)
    assert np.allclose(a2[:63, :63], a1)


def test_zero_radius_drops_fault_pairs(case1_model):
    import dataclasses

    f = case1_model.fault
    g0 = (f.g_lower + f.g_upper) / 2
    m0 = dataclasses.replace(case1_model, fault=dataclasses.replace(f, g_lower=g0, g_upper=g0))
    c = build_theorem2(m0).constraint("lambda")
    for (i, j), expr in c.blocks.items():
        if j > 22 + 13 and i != j:
            pytest.fail(f"coupling block ({i},{j}) present with zero fault radius")


def test_parameterize_x2_examples():
    sv = parameterize_X2(np.diag([1.0, 0.0]))
    for _ in range(5):
        p = np.random.default_rng(_).normal(size=4)
        X = sv.expr.evaluate(p)
        assert X[0, 1] == 0.0
        EX = np.diag([1.0, 0.0]) @ X
        assert np.allclose(EX, EX.T) and EX[0, 0] == pytest.approx(sv.S.evaluate(p)[0, 0])
    sv = parameterize_X2(np.eye(2))
    assert sv.S.shape == (2, 2)
    X = sv.expr.evaluate(np.array([1.0, 0.3, 2.0]))
    assert np.allclose(X, X.T)
    sv = parameterize_X2(np.zeros((2, 2)))
    assert sv.S.shape == (0, 0) and len(sv.expr.coefs) == 4


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_x2_structure_reaches_all_admissible(seed):
    # any X2 with E X2 = X2'E' >= 0 is reachable by the parameterization
    g = np.random.default_rng(seed)
    E = g.normal(size=(3, 2)) @ g.normal(size=(2, 3))
    reg = VarRegistry()
    sv = parameterize_X2(E, reg)
    p = g.normal(size=reg.size)
    X = sv.expr.evaluate(p)
    EX = E @ X
    assert np.allclose(EX, EX.T, atol=1e-10)
    x_back = reg.pack({"X2": X})
    assert np.allclose(sv.expr.evaluate(x_back), X, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_affinity(seed, a, b):
    from ncts.model import model_from_dict
    from conftest import preset

    sys_ = _affinity_system(model_from_dict, preset)
    g = np.random.default_rng(seed)
    v, w = g.normal(size=sys_.nvars), g.normal(size=sys_.nvars)
    for c in sys_.constraints[:4]:
        lhs = c.evaluate(a * v + b * w)
        rhs = a * c.evaluate(v) + b * c.evaluate(w) + (1 - a - b) * c.evaluate(np.zeros_like(v))
        scale = 1 + np.abs(c.evaluate(v)).max() + np.abs(c.evaluate(w)).max()
        assert np.abs(lhs - rhs).max() <= 1e-12 * scale * 10
        assert np.array_equal(lhs, lhs.T)


_CACHE = {}


def _affinity_system(model_from_dict, preset):
    if "t2" not in _CACHE:
        _CACHE["t2"] = build_theorem2(model_from_dict(preset("case1")["model"]))
    return _CACHE["t2"]


def _toy():
    reg = VarRegistry()
    x = reg.scalar("x")
    c = Constraint("c", PSD, BlockLayout([1]))
    c.add(1, 1, x - np.eye(1))
    return LmiSystem(reg, [c])


def test_sdpa_toy_matches_reference_file():
    assert export_sdpa(_toy()) == (FIXTURES / "toy.dat-s").read_text()
    assert len(export_sdpa(_toy()).splitlines()) == 6


def test_sdpa_empty_system():
    text = export_sdpa(LmiSystem(VarRegistry(), []))
    assert text.splitlines()[0] == "0 = mDIM" and len(text.splitlines()) == 4
    assert parse_sdpa(text).nvars == 0


def test_sdpa_roundtrip_theorem2(systems, rng):
    sys_ = systems[1]
    prob = parse_sdpa(export_sdpa(sys_))
    ref = to_sdpa_problem(sys_)
    x = rng.normal(size=sys_.nvars)
    for a, b in zip(prob.evaluate(x), ref.evaluate(x)):
        assert np.allclose(a, b, rtol=1e-15, atol=1e-13)


def test_sdpa_max_eig_objective():
    prob = parse_sdpa(export_sdpa(_toy(), MAX_EIG))
    assert prob.nvars == 2 and prob.c.tolist() == [0.0, 1.0]


def test_sdpa_rejects_equality_and_garbage():
    reg = VarRegistry()
    c = Constraint("eq", "zero", BlockLayout([1]))
    c.add(1, 1, reg.scalar("x"))
    with pytest.raises(SdpaError):
        export_sdpa(LmiSystem(reg, [c]))
    with pytest.raises(SdpaError):
        parse_sdpa("1 = mDIM\n")


def test_sdpa_deterministic(systems):
    assert export_sdpa(systems[0]) == export_sdpa(systems[0])


def test_block_shape_error_names_coordinates():
    c = Constraint("omega", NEG, BlockLayout([2, 1]))
    with pytest.raises(AssemblyError, match=r"\(1,2\)"):
        c.add(1, 2, np.zeros((2, 2)))
