import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levishell.distance import (
    D_forms,
    adapted_frame,
    boundary_delta_hessian,
    boundary_delta_hessian_exact,
    delta_gradient,
    delta_hessian,
    project_many,
    project_to_boundary,
    sample_boundary_points,
    sample_shell,
    shell_sample,
    signed_distance,
)
from levishell.errors import AmbiguityError, ArgumentError, SamplingError, SingularPointError
from levishell.geometry import HessianForms

from oracles import (
    ball_delta_hessian,
    ellipsoid_nearest_bruteforce,
    ellipsoid_nearest_secular,
)

ELLIPSOID_W = np.array([2.0, 2.0, 1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1.4, 1.4), min_size=4, max_size=4).filter(
    lambda z: 0.3 < np.linalg.norm(z) < 1.4 and abs(np.linalg.norm(z) - 1) > 1e-3))
def test_ball_closed_forms(z):
    from levishell.catalog import make_catalog_spec

    s = make_catalog_spec("ball")
    z = np.array(z)
    r = np.linalg.norm(z)
    assert signed_distance(s, z) == pytest.approx(r - 1, abs=1e-12)
    np.testing.assert_allclose(delta_gradient(s, z), z / r, atol=1e-12)
    forms = delta_hessian(s, z)
    exact = HessianForms.from_real_hessian(ball_delta_hessian(z))
    np.testing.assert_allclose(forms.H, exact.H, atol=1e-6)
    np.testing.assert_allclose(forms.L, exact.L, atol=1e-6)


def test_ball_levi_examples(spec):
    s = spec("ball")
    L = delta_hessian(s, [0.5, 0, 0, 0]).L
    np.testing.assert_allclose(L, np.diag([0.5, 1.0]), atol=1e-6)
    _, _, DF = D_forms(s, [0.9, 0, 0, 0])
    np.testing.assert_allclose(DF.L.real, np.diag([4 / 9, -1 / 9]), atol=1e-6)


def test_ellipsoid_oracles_agree():
    z = np.array([0.2, -0.1, 0.5, 0.3])
    x1, d1 = ellipsoid_nearest_bruteforce(z, ELLIPSOID_W, n_dense=50_000)
    x2, d2 = ellipsoid_nearest_secular(z, ELLIPSOID_W)
    assert d1 == pytest.approx(d2, abs=1e-10)
    np.testing.assert_allclose(x1, x2, atol=1e-7)


def test_ellipsoid_projection_matches_secular(spec):
    s = spec("complex_ellipsoid")
    for z, bp, delta in sample_shell(s, 40, seed=5):
        x, d = ellipsoid_nearest_secular(z, ELLIPSOID_W)
        np.testing.assert_allclose(bp.point, x, atol=1e-9)
        assert -delta == pytest.approx(d, abs=1e-10)


def test_ambiguity_at_center(spec):
    with pytest.raises(AmbiguityError):
        project_to_boundary(spec("ball"), np.zeros(4))


def test_project_many_matches_single(spec, rng):
    s = spec("ball_image")
    Z = np.array([z for z, _, _ in sample_shell(s, 12, seed=3)])
    many = project_many(s, Z)
    for z, bp in zip(Z, many):
        one = project_to_boundary(s, z)
        np.testing.assert_array_equal(one.point, bp.point)
        np.testing.assert_array_equal(one.normal, bp.normal)


def test_project_many_soft_failures(spec):
    out = project_many(spec("ball"), np.array([np.zeros(4), [0.5, 0, 0, 0]]), errors=False)
    assert out[0] is None and out[1] is not None


def test_D_forms_chain_rule(spec, rng):
    s = spec("real_ellipsoid")
    for z, bp, delta in sample_shell(s, 5, seed=8):
        D, gD, forms = D_forms(s, z, check=True)
        assert D == pytest.approx(delta**2, rel=1e-12)
        np.testing.assert_allclose(gD, 2 * delta * bp.normal, atol=1e-12)
        sm = shell_sample(s, z, bp=bp)
        np.testing.assert_allclose(sm.D_forms.H, forms.H, atol=1e-12)


def test_singular_on_boundary(spec):
    s = spec("ball")
    with pytest.raises(SingularPointError):
        D_forms(s, [1.0, 0, 0, 0])
    with pytest.raises(SingularPointError):
        shell_sample(s, [0, 1.0, 0, 0])


@pytest.mark.parametrize("name", ["ball", "complex_ellipsoid", "real_ellipsoid", "model",
                                  "ball_image", "parabolic_slab"])
def test_boundary_limit_matches_exact(spec, name):
    s = spec(name)
    for p in sample_boundary_points(s, 4, seed=2):
        bp = project_to_boundary(s, p)
        H = boundary_delta_hessian(s, bp)
        E = boundary_delta_hessian_exact(s, bp)
        assert np.linalg.norm(H - E, 2) <= 1e-6 * (1 + np.linalg.norm(E, 2))


def test_adapted_frame(spec):
    s = spec("ball_image")
    z, _, delta = sample_shell(s, 1, seed=4)[0]
    fr = adapted_frame(s, z)
    assert fr.depth == pytest.approx(delta)
    for key, val in fr.residuals.items():
        assert val < 1e-8, key
    np.testing.assert_allclose(fr.from_adapted(fr.to_adapted(z)), z, atol=1e-14)
    with pytest.raises(ArgumentError):
        adapted_frame(s, [0.0, 0.0, 1.2, 0.0])


def test_sample_shell_properties(spec):
    s = spec("complex_ellipsoid")
    a = sample_shell(s, 30, seed=11)
    b = sample_shell(s, 30, seed=11, jobs=3)
    for (z1, p1, d1), (z2, p2, d2) in zip(a, b):
        np.testing.assert_array_equal(z1, z2)
        assert d1 == d2
    assert all(-s.shell_width <= d < 0 for _, _, d in a)
    out = sample_shell(s, 10, seed=11, side="outside")
    assert all(0 < d <= s.shell_width for _, _, d in out)


def test_sample_shell_local_patch(spec):
    s = spec("model", beta=2.0)
    c = np.zeros(4)
    items = sample_shell(s, 10, seed=1, width=1e-3, center=c, radius=0.01)
    for z, bp, _ in items:
        assert np.linalg.norm(bp.point) <= 0.01


def test_sampling_starvation(spec):
    with pytest.raises(SamplingError):
        sample_shell(spec("ball"), 10, seed=1, width=1e-9, max_batches=2)
    with pytest.raises(ArgumentError):
        sample_shell(spec("ball"), 10, seed=1, side="sideways")
