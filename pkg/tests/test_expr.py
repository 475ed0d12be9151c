import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from levishell.errors import SpecError
from levishell.expr import Jet, affine_substitution, parse_expression

X = sp.symbols("x1:5")


def _sympy_derivs(src, point):
    ns = {f"x{i + 1}": X[i] for i in range(4)}
    ns.update(
        re=lambda z: z[0], im=lambda z: z[1], abs2=lambda z: z[0] ** 2 + z[1] ** 2,
        z1=(X[0], X[1]), z2=(X[2], X[3]), exp=sp.exp, pi=sp.pi,
    )
    e = eval(src, {"__builtins__": {}}, ns)
    subs = dict(zip(X, point))
    g = [float(sp.diff(e, v).subs(subs)) for v in X]
    H = [[float(sp.diff(e, a, b).subs(subs)) for b in X] for a in X]
    return float(e.subs(subs)), np.array(g), np.array(H)


SOURCES = [
    "abs2(z1) + abs2(z2) - 1",
    "re(z2) + abs2(z1) - 2*im(z2)**2",
    "exp(x1*x2) - x3**3 + 0.5*x4",
    "(re(z1)**2 - im(z1)**2 + x3)**2 + (x4 + 2*x1*x2)**2 - 1",
    "x1*x2*x3*x4 + exp(-abs2(z1)) / 4",
]


@pytest.mark.parametrize("src", SOURCES)
def test_jet_matches_symbolic_derivatives(src, rng):
    e = parse_expression(src, 2)
    for _ in range(5):
        p = rng.uniform(-1, 1, 4)
        v0, g0, H0 = _sympy_derivs(src, p)
        j = e.evaluate(Jet.seeds(p))
        assert j.v == pytest.approx(v0, rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(j.g, g0, rtol=1e-12, atol=1e-12)
        H = np.zeros((4, 4)) if j.H is None else j.H
        np.testing.assert_allclose(H, H0, rtol=1e-12, atol=1e-12)


def test_batched_jets_match_single(rng):
    e = parse_expression(SOURCES[3], 2)
    P = rng.uniform(-1, 1, (7, 4))
    jb = e.evaluate(Jet.seeds(P))
    for i in range(7):
        js = e.evaluate(Jet.seeds(P[i]))
        assert jb.v[i] == js.v
        np.testing.assert_array_equal(jb.g[i], js.g)
        np.testing.assert_array_equal(jb.H[i], js.H)


def test_value_evaluation_is_batched(rng):
    e = parse_expression("abs2(z1) + a*x3", 2, {"a": 3.0})
    P = rng.uniform(-1, 1, (5, 4))
    vals = e.evaluate([P[:, i] for i in range(4)])
    np.testing.assert_allclose(vals, P[:, 0] ** 2 + P[:, 1] ** 2 + 3 * P[:, 2])


@pytest.mark.parametrize("src", SOURCES)
def test_str_round_trips(src, rng):
    e = parse_expression(src, 2)
    e2 = parse_expression(str(e), 2)
    P = rng.uniform(-1, 1, (6, 4))
    env = [P[:, i] for i in range(4)]
    np.testing.assert_allclose(e.evaluate(env), e2.evaluate(env), rtol=1e-14)


@pytest.mark.parametrize(
    "src",
    ["x5", "foo(z1)", "x1 ** 0.5", "x1 ** -1", "x1 / x2", "z3 + 1", "re(x1)", "lambda: 1",
     "x1 +", "abs2(z1, z2)", "x1 / 0"],
)
def test_rejects_bad_expressions(src):
    with pytest.raises(SpecError) as info:
        parse_expression(src, 2)
    assert info.value.field == "expression"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4),
       st.lists(st.floats(-1, 1), min_size=16, max_size=16),
       st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_affine_substitution_composes(y, m, s):
    e = parse_expression(SOURCES[3], 2)
    M = np.array(m).reshape(4, 4)
    sub = affine_substitution(e, M, s)
    x = M @ np.array(y) + np.array(s)
    assert sub.evaluate(list(np.array(y))) == pytest.approx(e.evaluate(list(x)), rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4),
       st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_hessian_matches_gradient_differences(p, d):
    e = parse_expression(SOURCES[2], 2)
    p = np.array(p)
    d = np.array(d)
    h = 1e-6
    jp = e.evaluate(Jet.seeds(p + h * d))
    jm = e.evaluate(Jet.seeds(p - h * d))
    j0 = e.evaluate(Jet.seeds(p))
    fd = (jp.g - jm.g) / (2 * h)
    np.testing.assert_allclose(j0.H @ d, fd, atol=1e-5 * (1 + np.abs(fd).max()))
