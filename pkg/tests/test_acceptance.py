"""Acceptance criteria 1-10, one check each, at their pinned tolerances.

Run under pytest (a PASS/FAIL line per criterion is printed in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from levishell.catalog import catalog_names, make_catalog_spec  # noqa: E402
from levishell.cli import run  # noqa: E402
from levishell.distance import (  # noqa: E402
    delta_gradient,
    delta_hessian,
    sample_boundary_points,
    sample_shell,
    shell_sample,
    signed_distance,
)
from levishell.forms import (  # noqa: E402
    ConeSpec,
    boundary_forms,
    classify_boundary,
    cone_min,
    max_gamma,
    tangent_frame,
)
from levishell.geometry import HessianForms, apply_form, hessian_forms  # noqa: E402
from levishell.theorems import (  # noqa: E402
    cone_minimizer_check,
    df_verify,
    verify_theorem,
)
from oracles import ball_delta_hessian, ellipsoid_nearest_bruteforce  # noqa: E402

SAMPLES = 500
SEED = 20110101
RESULTS: dict[int, tuple[bool, str]] = {}
TITLES = {
    1: "form identities H+H(i.,i.)=4L and H=2Q+2L",
    2: "distance oracle (ellipsoid brute force, ball closed forms)",
    3: "unit gradient and normal annihilation on all catalog shells",
    4: "Oka: verify oka passes on ball, complex ellipsoid, ball image",
    5: "convexity: real ellipsoid inside+outside pass, ball image fails",
    6: "C-convexity: real ellipsoid passes, flag chain on all domains",
    7: "gamma machinery: slab cone_min, model max_gamma, cone minimizer",
    8: "exponent: beta=2 model eta=1/3, slab reports no exponent",
    9: "counterexample: verify oka on Re z2 - |z1|^2 exits 1",
    10: "reproducibility across runs and thread counts",
}


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run(list(argv))
    return code, out.getvalue()


# --------------------------------------------------------------------------


def criterion_1():
    rng = np.random.default_rng(1)
    names = catalog_names()
    worst_4l = worst_hql = 0.0
    for k in range(1000):
        s = make_catalog_spec(names[k % len(names)])
        b = s.function.bounds
        p = b[:, 0] + (b[:, 1] - b[:, 0]) * rng.random(len(b))
        forms = hessian_forms(s.function, p)
        A = rng.normal(size=s.n) + 1j * rng.normal(size=s.n)
        B = rng.normal(size=s.n) + 1j * rng.normal(size=s.n)
        ref = (1 + forms.norm) * np.linalg.norm(A) * np.linalg.norm(B)
        r4 = (apply_form(forms, "H", A, B) + apply_form(forms, "H", 1j * A, 1j * B)
              - 4 * apply_form(forms, "L", A, B))
        rh = (apply_form(forms, "H", A, A) - 2 * apply_form(forms, "Q", A, A)
              - 2 * apply_form(forms, "L", A, A))
        worst_4l = max(worst_4l, abs(r4) / ref)
        worst_hql = max(worst_hql, abs(rh) / ((1 + forms.norm) * np.linalg.norm(A) ** 2))
    ok = worst_4l <= 1e-10 and worst_hql <= 1e-10
    return ok, f"max rel residual 4L {worst_4l:.2e}, 2Q+2L {worst_hql:.2e} (tol 1e-10)"


def criterion_2():
    s = make_catalog_spec("complex_ellipsoid")
    w = np.array([2.0, 2.0, 1.0, 1.0])
    worst_pt = worst_d = 0.0
    for k, (z, bp, delta) in enumerate(sample_shell(s, 100, seed=SEED)):
        x, d = ellipsoid_nearest_bruteforce(z, w, seed=k)
        worst_pt = max(worst_pt, float(np.linalg.norm(bp.point - x)))
        worst_d = max(worst_d, abs(-delta - d))
    ball = make_catalog_spec("ball")
    rng = np.random.default_rng(2)
    worst_ball = 0.0
    for _ in range(100):
        u = rng.normal(size=4)
        z = u / np.linalg.norm(u) * rng.uniform(0.3, 1.4)
        if abs(np.linalg.norm(z) - 1) < 1e-3:
            continue
        r = np.linalg.norm(z)
        exact = HessianForms.from_real_hessian(ball_delta_hessian(z))
        worst_ball = max(
            worst_ball,
            abs(signed_distance(ball, z) - (r - 1)),
            float(np.abs(delta_gradient(ball, z) - z / r).max()),
            float(np.abs(delta_hessian(ball, z).L - exact.L).max()),
        )
    ok = max(worst_pt, worst_d, worst_ball) <= 1e-6
    return ok, (f"ellipsoid point err {worst_pt:.2e}, distance err {worst_d:.2e}; "
                f"ball closed-form err {worst_ball:.2e} (tol 1e-6)")


def criterion_3():
    worst_g = worst_a = 0.0
    for name in catalog_names():
        s = make_catalog_spec(name)
        for z, bp, _ in sample_shell(s, 100, seed=SEED, width=0.1 * s.scale):
            sm = shell_sample(s, z, bp=bp)
            H = sm.delta_forms.H
            worst_g = max(worst_g, abs(float(np.linalg.norm(sm.gradient)) - 1.0))
            hn = float(np.linalg.norm(H, 2))
            # max over unit W of |H(W, nu)| is |H nu|
            worst_a = max(worst_a, float(np.linalg.norm(H @ sm.gradient)) / hn if hn else 0.0)
    ok = worst_g <= 1e-6 and worst_a <= 1e-6
    return ok, f"max | |grad delta| - 1 | {worst_g:.2e}, max |H(W,grad)|/|H| {worst_a:.2e} (tol 1e-6)"


def criterion_4():
    parts, ok = [], True
    for name in ("ball", "complex_ellipsoid", "ball_image"):
        s = make_catalog_spec(name)
        r = verify_theorem("oka", s, 0.1 * s.scale, SAMPLES, seed=SEED)
        good = r.min_slack >= -1e-6 * s.scale and r.hypothesis["holds"]
        ok &= good
        parts.append(f"{name} {r.min_slack:.2e}")
    return ok, "min slack: " + ", ".join(parts) + " (>= -1e-6*scale)"


def criterion_5():
    ell = make_catalog_spec("real_ellipsoid")
    img = make_catalog_spec("ball_image")
    rin = verify_theorem("convex", ell, None, SAMPLES, seed=SEED)
    rout = verify_theorem("convex", ell, None, SAMPLES, seed=SEED, side="outside")
    rimg = verify_theorem("convex", img, None, SAMPLES, seed=SEED)
    pseudo = verify_theorem("oka", img, None, 50, seed=SEED).passed
    ok = rin.passed and rout.passed and (not rimg.passed) and rimg.min_slack < 0 and pseudo
    return ok, (f"ellipsoid inside {rin.min_slack:.2e}, outside {rout.min_slack:.2e}; "
                f"ball image {rimg.min_slack:.2e} (expected negative; Oka holds: {pseudo})")


def criterion_6():
    r = verify_theorem("cconvex", make_catalog_spec("real_ellipsoid"), None, SAMPLES, seed=SEED)
    violations = 0
    checked = 0
    for name in catalog_names():
        s = make_catalog_spec(name)
        for p in sample_boundary_points(s, 20, seed=SEED):
            f = classify_boundary(s, p, with_max_gamma=False).flags
            checked += 1
            if (f["convex"] and not f["c_convex"]) or (f["c_convex"] and not f["pseudoconvex"]):
                violations += 1
    ok = r.passed and violations == 0
    return ok, f"real ellipsoid min slack {r.min_slack:.2e}; chain violations {violations}/{checked}"


def criterion_7():
    slab = make_catalog_spec("parabolic_slab")
    forms = boundary_forms(slab, np.zeros(4))
    frame = tangent_frame(slab, np.zeros(4))
    err_cone = max(abs(cone_min(forms, frame, ConeSpec(g)) + g * g / (2 * (1 + g * g)))
                   for g in (0.5, 1.0, 2.0))
    err_gamma = 0.0
    for beta in (0.5, 2.0, 8.0):
        s = make_catalog_spec("model", {"beta": beta})
        err_gamma = max(err_gamma, abs(max_gamma(s, np.zeros(4)) - math.sqrt(2 / beta)))
    err_min = 0.0
    for v in np.linspace(0.0, 2.0, 20):
        for g in np.geomspace(0.05, 50.0, 20):
            for e in np.geomspace(1e-3, 5.0, 20):
                num, closed, _ = cone_minimizer_check(v, g * v + e, g)
                err_min = max(err_min, abs(num - closed))
    ok = err_cone <= 1e-4 and err_gamma <= 1e-3 and err_min <= 1e-10
    return ok, (f"slab cone_min err {err_cone:.2e} (1e-4), model max_gamma err {err_gamma:.2e} "
                f"(1e-3), cone minimizer residual {err_min:.2e} (1e-10)")


def criterion_8():
    model = make_catalog_spec("model", {"beta": 2.0})
    res = df_verify(model, n_boundary=16, n_shell=200, seed=SEED, center=np.zeros(4), radius=5e-4)
    slab = df_verify(make_catalog_spec("parabolic_slab"), n_boundary=8, seed=SEED)
    ok = (abs(res.eta - 1 / 3) <= 1e-3 and res.certified
          and res.verification.min_slack >= -res.verification.tol
          and slab.gamma_star == 0.0 and not slab.certified
          and "no positive exponent" in slab.message)
    return ok, (f"model gamma* {res.gamma_star:.6f}, eta {res.eta:.6f}, levi_power min "
                f"{res.verification.min_slack:.2e}; slab gamma* {slab.gamma_star}, "
                f"certified {slab.certified}")


def criterion_9():
    code, out = _cli("verify", "oka", "non_pseudoconvex", "--samples", str(SAMPLES), "--no-meta")
    rep = json.loads(out)
    ok = code == 1 and rep["min_slack"] < 0 and len(rep["argmin_point"]) == 4
    return ok, f"exit {code}, min slack {rep['min_slack']:.3e} at {np.round(rep['argmin_point'], 4)}"


def criterion_10():
    outs = []
    for argv in (("verify", "oka", "ball_image", "--samples", "200", "--jobs", "1"),
                 ("verify", "oka", "ball_image", "--samples", "200", "--jobs", "1"),
                 ("verify", "oka", "ball_image", "--samples", "200", "--jobs", "4"),
                 ("sweep", "model", "--samples", "8", "--jobs", "1"),
                 ("sweep", "model", "--samples", "8", "--jobs", "3")):
        outs.append(_cli(*argv, "--no-meta")[1])
    ok = outs[0] == outs[1] == outs[2] and outs[3] == outs[4]
    return ok, f"verify reports identical: {outs[0] == outs[1] == outs[2]}, sweeps identical: {outs[3] == outs[4]}"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in TITLES}


def _record(k):
    ok, detail = CRITERIA[k]()
    RESULTS[k] = (bool(ok), detail)
    return ok, detail


@pytest.mark.parametrize("k", list(TITLES))
def test_criterion(k):
    ok, detail = _record(k)
    assert ok, detail


def format_line(k):
    ok, detail = RESULTS[k]
    return f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {TITLES[k]} -- {detail}"


if __name__ == "__main__":
    failed = 0
    for k in TITLES:
        _record(k)
        print(format_line(k), flush=True)
        failed += not RESULTS[k][0]
    sys.exit(1 if failed else 0)
