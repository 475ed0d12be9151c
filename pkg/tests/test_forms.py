import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levishell.distance import project_to_boundary, sample_boundary_points
from levishell.errors import ArgumentError, DomainError
from levishell.forms import (
    ConeSpec,
    boundary_forms,
    classify_boundary,
    cone_error_bound,
    cone_membership,
    cone_min,
    max_gamma,
    restricted_min_eig,
    tangent_frame,
)
from levishell.geometry import HessianForms, realify, to_real, unitary_transform


def _slab_origin(spec):
    s = spec("parabolic_slab")
    p = np.zeros(4)
    return s, boundary_forms(s, p), tangent_frame(s, p)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 0.0, 10.0])
def test_slab_cone_min_closed_form(spec, gamma):
    _, forms, frame = _slab_origin(spec)
    assert cone_min(forms, frame, ConeSpec(gamma)) == pytest.approx(
        -gamma**2 / (2 * (1 + gamma**2)), abs=1e-8)


def test_cone_min_unrefined_within_bound(spec):
    _, forms, frame = _slab_origin(spec)
    exact = -0.5 / (2 * 1.5)
    rough = cone_min(forms, frame, ConeSpec(math.sqrt(0.5)), resolution=16, refine=False)
    assert abs(rough - exact) <= cone_error_bound(16, forms.norm)


def test_cone_min_against_direct_sampling(spec, rng):
    s = spec("model", beta=2.0)
    p = sample_boundary_points(s, 1, seed=9)[0]
    forms = boundary_forms(s, p)
    frame = tangent_frame(s, p)
    g = 0.7
    M = forms.levi_real
    C = frame.ct_real_basis
    c = rng.normal(size=(200_000, len(C))) @ C
    t = rng.uniform(-1, 1, 200_000) * g * np.linalg.norm(c, axis=1)
    V = c + t[:, None] * frame.i_normal
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    sampled = np.min(np.einsum("bi,ij,bj->b", V, M, V))
    val = cone_min(forms, frame, ConeSpec(g))
    assert val <= sampled + 1e-12
    assert val >= sampled - 1e-3


@pytest.mark.parametrize("beta", [0.5, 2.0, 8.0])
def test_model_max_gamma(spec, beta):
    assert max_gamma(spec("model", beta=beta), np.zeros(4)) == pytest.approx(
        math.sqrt(2 / beta), abs=1e-3)


def test_max_gamma_extremes(spec):
    assert max_gamma(spec("ball"), [1.0, 0, 0, 0]) == 1e3
    assert max_gamma(spec("parabolic_slab"), np.zeros(4)) == 0.0
    with pytest.raises(ArgumentError):
        max_gamma(spec("ball"), [1.0, 0, 0, 0], tol=-1.0)


def test_restricted_min_eig():
    H = np.diag([1.0, 2.0, -3.0, 4.0])
    forms = HessianForms.from_real_hessian(H)
    assert restricted_min_eig(forms, "H", np.eye(4)[:2]) == pytest.approx(1.0)
    assert restricted_min_eig(forms, "H", np.eye(4)) == pytest.approx(-3.0)
    # complex span of e1 covers x1, y1: L restricted there is (H11 + H22)/4
    assert restricted_min_eig(forms, "L", np.array([[1, 0j]])) == pytest.approx(0.75)
    assert restricted_min_eig(forms, "H", np.zeros((0, 4))) == math.inf
    with pytest.raises(ArgumentError):
        restricted_min_eig(forms, "H", np.ones((1, 4)))
    with pytest.raises(ArgumentError):
        restricted_min_eig(forms, "Q", np.eye(4))


def test_tangent_frame_and_membership(spec):
    s = spec("ball")
    fr = tangent_frame(s, [0.6, 0, 0.8, 0])
    B = fr.rt_basis
    np.testing.assert_allclose(B @ B.T, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(B @ fr.normal, 0, atol=1e-12)
    inu = fr.i_normal
    c = fr.ct_real_basis[0]
    assert cone_membership(fr, (c + 0.5 * inu)[0::2] + 1j * (c + 0.5 * inu)[1::2], ConeSpec(1.0))
    assert not cone_membership(fr, (c + 2 * inu)[0::2] + 1j * (c + 2 * inu)[1::2], ConeSpec(1.0))
    assert cone_membership(fr, inu[0::2] + 1j * inu[1::2], ConeSpec(1e3))
    with pytest.raises(ArgumentError):
        cone_membership(fr, np.array([0.6, 0.8]), ConeSpec(1.0))
    with pytest.raises(DomainError):
        tangent_frame(s, [0.5, 0, 0, 0])
    with pytest.raises(ArgumentError):
        ConeSpec(-1.0)


def test_classify_ball_and_counterexample(spec):
    r = classify_boundary(spec("ball"), [1.0, 0, 0, 0])
    assert all(r.flags.values())
    assert r.min_eig_L_CT == pytest.approx(0.5, abs=1e-6)
    assert r.limit_crosscheck < 1e-6
    r = classify_boundary(spec("non_pseudoconvex"), np.zeros(4))
    assert r.min_eig_L_CT == pytest.approx(-1.0, abs=1e-6)
    assert not any(r.flags.values())


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 1000))
def test_unitary_invariance(seed):
    from levishell.catalog import make_catalog_spec

    rng = np.random.default_rng(seed)
    s = make_catalog_spec("complex_ellipsoid")
    U, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    shift = 0.1 * (rng.normal(size=2) + 1j * rng.normal(size=2))
    t = unitary_transform(s, U, shift)
    p = sample_boundary_points(s, 1, seed=seed)[0]
    w = realify(U).T @ (p - to_real(shift))
    a = classify_boundary(s, p, gamma_query=1.0)
    b = classify_boundary(t, project_to_boundary(t, w).point, gamma_query=1.0)
    for key in ("min_eig_L_CT", "min_eig_H_RT", "min_eig_L_RT", "cone_min"):
        assert getattr(a, key) == pytest.approx(getattr(b, key), abs=1e-6)
    assert a.max_gamma == pytest.approx(b.max_gamma, rel=1e-4)
