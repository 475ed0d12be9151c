"""Slack of the squared-distance inequalities and sampled verification reports.

Each theorem is checked through an inequality on ``D = delta^2`` at interior
(or, for convexity, exterior) shell points.  The slack ``RHS - LHS`` is a real
quadratic form in the direction, so its minimum over unit directions is the
lowest eigenvalue of a symmetric 2n x 2n matrix: per-point checks are exact in
the direction and only the points are sampled.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import config
from .distance import (
    _D_hessian,
    _delta_hessian_matrix,
    _local_normals,
    _signed,
    project_to_boundary,
    sample_boundary_points,
    sample_shell,
    shell_sample,
)
from .errors import AccuracyError, ArgumentError, DomainError, SingularPointError
from .forms import classify_boundary, max_gamma
from .geometry import (
    DomainSpec,
    complex_gradient_gram,
    complex_structure,
    levi_matrix_real,
    to_real,
)

KINDS = ("oka", "convex", "cconvex", "psh", "gamma")

# boundary flag each theorem assumes
HYPOTHESIS_FLAG = {
    "oka": "pseudoconvex",
    "convex": "convex",
    "cconvex": "c_convex",
    "psh": "psh_on_boundary",
    "gamma": "gamma_psh",
}


@dataclass
class TheoremReport:
    kind: str
    domain: str
    shell_width: float
    n_samples: int
    seed: int
    min_slack: float
    argmin_point: list
    argmin_direction: list
    tol: float
    passed: bool
    runtime: float
    side: str = "inside"
    gamma: float | None = None
    min_slack_sampled: float | None = None
    argmin_delta: float | None = None
    hypothesis: dict = field(default_factory=dict)
    defaults: dict = field(default_factory=config.defaults_dict)
    rows: list = field(default_factory=list, repr=False)

    def to_dict(self, meta: bool = True) -> dict:
        d = {
            "kind": self.kind,
            "gamma": self.gamma,
            "domain": self.domain,
            "side": self.side,
            "shell_width": self.shell_width,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "min_slack": self.min_slack,
            "min_slack_sampled": self.min_slack_sampled,
            "argmin_point": self.argmin_point,
            "argmin_direction": self.argmin_direction,
            "argmin_delta": self.argmin_delta,
            "tol": self.tol,
            "passed": self.passed,
            "hypothesis": self.hypothesis,
            "defaults": self.defaults,
        }
        if meta:
            d["runtime"] = self.runtime
        return d


@dataclass
class DFResult:
    gamma_star: float
    eta: float
    certified: bool
    message: str
    boundary_gammas: list
    verification: TheoremReport | None
    eta_empirical: float | None = None

    def to_dict(self, meta: bool = True) -> dict:
        return {
            "gamma_star": self.gamma_star,
            "eta": self.eta,
            "certified": self.certified,
            "message": self.message,
            "boundary_gammas": self.boundary_gammas,
            "verification": None if self.verification is None else self.verification.to_dict(meta),
            "eta_empirical": self.eta_empirical,
        }


# ---------------------------------------------------------------------------
# slack forms
# ---------------------------------------------------------------------------


def _check_kind(kind, gamma):
    if kind not in KINDS:
        raise ArgumentError(f"unknown theorem kind {kind!r}; expected one of {', '.join(KINDS)}")
    if kind == "gamma":
        if gamma is None or not gamma >= 0:
            raise ArgumentError("kind 'gamma' needs a nonnegative aperture")


def gamma_coefficient(gamma: float) -> float:
    """``1 + 2/(2 + gamma^2)``, equal to ``2 - eta``."""
    if math.isinf(gamma):
        return 1.0
    return 1.0 + 2.0 / (2.0 + gamma * gamma)


def slack_matrix(kind: str, delta: float, nu, H_D, gamma: float | None = None) -> np.ndarray:
    """Symmetric matrix ``S`` with ``slack(V) = v.S.v`` for real ``v`` of ``V``.

    ``delta`` and ``nu`` give ``D = delta^2`` and ``grad D = 2 delta nu``.
    Outside the domain (``delta > 0``) convexity of ``delta`` reverses the
    comparison with ``H_D``, so the convex slack changes sign there.
    """
    _check_kind(kind, gamma)
    D = delta * delta
    gD = 2.0 * delta * np.asarray(nu, float)
    if kind in ("convex", "cconvex"):
        S = np.outer(gD, gD) / (2.0 * D) - H_D
        if kind == "convex" and delta > 0:
            S = -S
        if kind == "cconvex":
            Jg = complex_structure(len(gD) // 2).T @ gD
            S = S + np.outer(Jg, Jg) / (2.0 * D)
    else:
        G = complex_gradient_gram(gD)
        L = levi_matrix_real(H_D)
        if kind == "oka":
            S = G / D - L
        elif kind == "psh":
            S = G / (2.0 * D) - L
        else:
            S = gamma_coefficient(gamma) * G / (2.0 * D) - L
    return (S + S.T) / 2.0


def _unit(V, n):
    V = np.asarray(V, dtype=complex)
    if V.shape != (n,):
        raise ArgumentError(f"direction has shape {V.shape}, expected ({n},)")
    if abs(np.linalg.norm(V) - 1.0) > 1e-8:
        raise ArgumentError("direction must be a unit vector")
    return V


def theorem_slack(kind: str, spec: DomainSpec, q, V, gamma: float | None = None,
                  seed: int = 0) -> float:
    """RHS - LHS of the squared-distance inequality for ``kind`` at ``(q, V)``."""
    _check_kind(kind, gamma)
    V = _unit(V, spec.n)
    s = shell_sample(spec, q, seed)
    S = slack_matrix(kind, s.delta, s.gradient, s.D_forms.H, gamma)
    v = to_real(V)
    return float(v @ S @ v)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _hypothesis(kind, spec, points, gamma):
    flag = HYPOTHESIS_FLAG[kind]
    key = {
        "pseudoconvex": "min_eig_L_CT",
        "convex": "min_eig_H_RT",
        "c_convex": "min_eig_H_CT",
        "psh_on_boundary": "min_eig_L_RT",
        "gamma_psh": "cone_min",
    }[flag]
    worst = math.inf
    failing = 0
    for p in points:
        rep = classify_boundary(spec, p, gamma_query=gamma or 0.0, with_max_gamma=False)
        worst = min(worst, getattr(rep, key))
        failing += not rep.flags[flag]
    return {
        "flag": flag,
        "samples": len(points),
        "failing": failing,
        "holds": failing == 0,
        "worst_value": worst,
    }


def _sample_task(spec, kind, gamma, item, direction):
    z, bp, _ = item
    s = shell_sample(spec, z, bp=bp)
    S = slack_matrix(kind, s.delta, s.gradient, s.D_forms.H, gamma)
    w, U = np.linalg.eigh(S)
    v = to_real(direction)
    return s.delta, float(w[0]), U[:, 0], float(v @ S @ v)


def _map(fun, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fun, items))
    return [fun(it) for it in items]


def _random_directions(rng, count, n):
    V = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _vec_list(x):
    return [float(v) for v in x]


def verify_theorem(kind: str, spec: DomainSpec, shell: float | None = None,
                   n_samples: int = config.DEFAULT_SAMPLES, seed: int = config.DEFAULT_SEED,
                   tol: float = config.DEFAULT_TOL, side: str = "inside",
                   gamma: float | None = None, jobs: int = 1, hypothesis_samples: int = 10,
                   center=None, radius=None) -> TheoremReport:
    """Sample the shell, minimize the slack over directions per point, report the minimum.

    A violated hypothesis is reported in ``hypothesis`` but not enforced, so
    the report doubles as a counterexample detector.
    """
    _check_kind(kind, gamma)
    if side not in ("inside", "outside"):
        raise ArgumentError("side must be 'inside' or 'outside'")
    if side == "outside" and kind != "convex":
        raise ArgumentError("only the convexity statement has an exterior version")
    if n_samples < 1:
        raise ArgumentError("n_samples must be positive")
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    start = time.perf_counter()
    width = spec.shell_width if shell is None else float(shell)
    items = sample_shell(spec, n_samples, seed, width, side, jobs=jobs, center=center, radius=radius)
    rng = np.random.default_rng(seed + 1)
    dirs = _random_directions(rng, len(items), spec.n)
    results = _map(lambda k: _sample_task(spec, kind, gamma, items[k], dirs[k]),
                   range(len(items)), jobs)
    mins = np.array([r[1] for r in results])
    k = int(np.argmin(mins))
    delta_k, min_slack, vec, _ = results[k]
    sampled = min(r[3] for r in results)
    hyp_points = [it[1] for it in items[:hypothesis_samples]]
    hypothesis = _hypothesis(kind, spec, hyp_points, gamma) if hypothesis_samples else {}
    rows = [
        (_vec_list(items[i][0]), float(results[i][0]), float(results[i][1]))
        for i in range(len(items))
    ]
    vc = vec[0::2] + 1j * vec[1::2]
    return TheoremReport(
        kind=kind,
        domain=spec.name,
        shell_width=width,
        n_samples=len(items),
        seed=seed,
        min_slack=float(min_slack),
        argmin_point=_vec_list(items[k][0]),
        argmin_direction=_vec_list(vec),
        tol=tol,
        passed=bool(min_slack >= -tol),
        runtime=time.perf_counter() - start,
        side=side,
        gamma=gamma,
        min_slack_sampled=float(sampled),
        argmin_delta=float(delta_k),
        hypothesis=hypothesis,
        rows=rows,
    )


def certify_shell_width(kind: str, spec: DomainSpec, start: float | None = None,
                        min_width: float | None = None, **kwargs):
    """Halve the shell width until ``verify_theorem`` passes.

    Returns ``(width, report)``; ``width`` is None when no width down to
    ``min_width`` passes.
    """
    width = spec.shell_width if start is None else float(start)
    floor = 1e-3 * spec.scale if min_width is None else float(min_width)
    report = None
    while width >= floor:
        report = verify_theorem(kind, spec, shell=width, **kwargs)
        if report.passed:
            return width, report
        width /= 2.0
    return None, report


# ---------------------------------------------------------------------------
# Diederich-Fornaess exponent
# ---------------------------------------------------------------------------


def df_exponent(gamma: float) -> float:
    """``eta = 1 - 2/(2 + gamma^2)``."""
    if not gamma >= 0:
        raise ArgumentError("gamma must be nonnegative")
    if math.isinf(gamma):
        return 1.0
    return 1.0 - 2.0 / (2.0 + gamma * gamma)


def levi_power_bracket(delta: float, nu, H_delta, eta: float) -> np.ndarray:
    """Matrix of ``V -> (-delta) L_delta(V,V) + (1-eta) |<d delta, V>|^2``.

    The Levi form of ``-(-delta)^eta`` is this times ``eta (-delta)^(eta-2) > 0``.
    """
    return (-delta) * levi_matrix_real(H_delta) + (1.0 - eta) * complex_gradient_gram(nu)


def _check_eta(eta):
    if not 0.0 < eta < 1.0:
        raise ArgumentError("eta must lie in (0, 1)")


def levi_power(spec: DomainSpec, q, eta: float, V, seed: int = 0, check: bool = True) -> float:
    """Levi form of ``-(-delta)^eta`` at ``q`` in direction ``V`` (factorized form).

    With ``check`` the value is compared against central differences of the
    exact gradient ``eta (-delta)^(eta-1) nu``.
    """
    _check_eta(eta)
    z = spec.function.check_point(q)
    V = np.asarray(V, dtype=complex)
    if V.shape != (spec.n,):
        raise ArgumentError(f"direction has shape {V.shape}, expected ({spec.n},)")
    bp = project_to_boundary(spec, z, seed)
    delta = _signed(spec, z, bp)
    if delta >= 0:
        raise DomainError("levi_power needs an interior point (delta < 0)")
    Hd = _delta_hessian_matrix(spec, z, bp, None)
    B = levi_power_bracket(delta, bp.normal, Hd, eta)
    v = to_real(V)
    factor = eta * (-delta) ** (eta - 2.0)
    value = float(factor * (v @ B @ v))
    if check:
        Lfd = levi_matrix_real(_power_hessian_fd(spec, z, bp, eta))
        fd = float(v @ Lfd @ v)
        ref = factor * np.linalg.norm(B, 2) * float(v @ v)
        if abs(value - fd) > config.LEVI_POWER_CHECK_RTOL * max(ref, abs(value), 1e-300):
            raise AccuracyError(f"levi_power factorization {value:.12g} vs finite differences {fd:.12g}")
    return value


def _power_hessian_fd(spec, z, bp, eta):
    m = spec.function.dim
    # (-delta)^eta has derivatives growing like |delta|^(eta - k): scale the step with depth
    depth = float(np.linalg.norm(z - bp.point))
    h = min(config.FD_STEP * spec.scale, 1e-3 * depth)
    E = np.eye(m) * h
    pts = np.concatenate([z + E, z - E])
    q, nu = _local_normals(spec, pts, bp.point)
    dist = np.linalg.norm(pts - q, axis=1)
    if np.any(spec.function.value(pts) >= 0):
        raise SingularPointError("finite-difference stencil crosses the boundary")
    g = (eta * dist ** (eta - 1.0))[:, None] * nu
    H = (g[:m] - g[m:]).T / (2 * h)
    return (H + H.T) / 2.0


def _bracket_task(spec, eta, item):
    z, bp, delta = item
    Hd = _delta_hessian_matrix(spec, z, bp, None)
    B = levi_power_bracket(delta, bp.normal, Hd, eta)
    w, U = np.linalg.eigh((B + B.T) / 2.0)
    return float(w[0]), U[:, 0]


def verify_levi_power(spec: DomainSpec, eta: float, shell: float | None = None,
                      n_samples: int = 200, seed: int = config.DEFAULT_SEED,
                      tol: float = config.DEFAULT_TOL, jobs: int = 1,
                      center=None, radius=None) -> TheoremReport:
    """Eigen-exact check that ``-(-delta)^eta`` is plurisubharmonic on the inner shell.

    The reported slack is the lowest eigenvalue of the dimensionless bracket
    ``(-delta) L_delta + (1-eta) |d delta|^2``, which has the sign of the Levi form.
    """
    _check_eta(eta)
    start = time.perf_counter()
    width = spec.shell_width if shell is None else float(shell)
    items = sample_shell(spec, n_samples, seed, width, "inside", jobs=jobs,
                         center=center, radius=radius)
    results = _map(lambda it: _bracket_task(spec, eta, it), items, jobs)
    mins = np.array([r[0] for r in results])
    k = int(np.argmin(mins))
    return TheoremReport(
        kind="levi_power",
        domain=spec.name,
        shell_width=width,
        n_samples=len(items),
        seed=seed,
        min_slack=float(mins[k]),
        argmin_point=_vec_list(items[k][0]),
        argmin_direction=_vec_list(results[k][1]),
        tol=tol,
        passed=bool(mins[k] >= -tol),
        runtime=time.perf_counter() - start,
        gamma=eta,
        argmin_delta=float(items[k][2]),
        rows=[(_vec_list(items[i][0]), float(items[i][2]), float(mins[i])) for i in range(len(items))],
    )


def largest_passing_eta(spec: DomainSpec, shell: float | None = None, n_samples: int = 200,
                        seed: int = config.DEFAULT_SEED, tol: float = config.DEFAULT_TOL,
                        jobs: int = 1, center=None, radius=None, iters: int = 40) -> float:
    """Largest ``eta`` in ``(0, 1)`` passing the shell check on one fixed sample set.

    Empirical only: the slack decreases in ``eta``, so bisection applies.
    Returns 0.0 when no positive exponent passes.
    """
    width = spec.shell_width if shell is None else float(shell)
    items = sample_shell(spec, n_samples, seed, width, "inside", jobs=jobs,
                         center=center, radius=radius)

    def parts(item):
        z, bp, delta = item
        A = (-delta) * levi_matrix_real(_delta_hessian_matrix(spec, z, bp, None))
        return (A + A.T) / 2.0, complex_gradient_gram(bp.normal)

    mats = _map(parts, items, jobs)
    A = np.stack([m[0] for m in mats])
    G = np.stack([m[1] for m in mats])

    def passes(eta):
        return float(np.linalg.eigvalsh(A + (1.0 - eta) * G)[:, 0].min()) >= -tol

    lo, hi = 0.0, 1.0
    if passes(1.0):
        return 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if passes(mid) else (lo, mid)
    return lo


def df_verify(spec: DomainSpec, shell: float | None = None, n_boundary: int = 16,
              n_shell: int = 200, seed: int = config.DEFAULT_SEED, tol: float = config.DEFAULT_TOL,
              center=None, radius=None, eta: float | None = None, jobs: int = 1,
              search_eta: bool = False) -> DFResult:
    """Smallest boundary aperture with its exponent, checked on the inner shell.

    ``center``/``radius`` restrict all samples to a ball (a local patch).
    ``eta`` overrides the exponent that is checked on the shell.
    ``search_eta`` adds the empirical largest passing exponent (no sharpness claim).
    """
    if center is not None:
        center = spec.function.check_point(center)
        if radius is None or not radius > 0:
            raise ArgumentError("a local patch needs a positive radius")
    pts = sample_boundary_points(spec, n_boundary, seed, center, radius)
    if len(pts) == 0:
        raise ArgumentError("no boundary points found in the requested patch")
    gammas = _map(lambda p: max_gamma(spec, p), list(pts), jobs)
    gstar = float(min(gammas))
    eta_star = df_exponent(gstar)
    if shell is None:
        shell = spec.shell_width if radius is None else min(spec.shell_width, 0.5 * radius)
    eta_check = eta_star if eta is None else float(eta)
    found = (largest_passing_eta(spec, shell, n_shell, seed, tol, jobs, center, radius)
             if search_eta else None)
    if not 0.0 < eta_check < 1.0:
        return DFResult(gstar, eta_star, False,
                        "no positive exponent certified: the boundary cone degenerates to the "
                        "complex tangent space (gamma* = 0)",
                        [float(g) for g in gammas], None, found)
    rep = verify_levi_power(spec, eta_check, shell, n_shell, seed, tol, jobs, center, radius)
    if rep.passed:
        msg = f"-(-delta)^eta is plurisubharmonic on the sampled shell for eta = {eta_check:.6g}"
    else:
        msg = f"negative Levi form of -(-delta)^eta found for eta = {eta_check:.6g}"
    return DFResult(gstar, eta_star, bool(rep.passed), msg, [float(g) for g in gammas], rep, found)


# ---------------------------------------------------------------------------
# closed-form cone minimizer
# ---------------------------------------------------------------------------


def cone_minimizer_closed_form(vprime_norm: float, t: float, gamma: float):
    """Minimum of ``2|V'-W'|^2 + (t-c)^2`` over ``|c| = gamma |W'|`` and the optimal ``c``."""
    g2 = gamma * gamma
    value = 2.0 * t * t / (2.0 + g2) * (1.0 - vprime_norm * gamma / t) ** 2
    c0 = gamma * (t * gamma + 2.0 * vprime_norm) / (2.0 + g2)
    return value, c0


def cone_minimizer_check(vprime_norm: float, t: float, gamma: float):
    """``(numeric_min, closed_form, c0)`` for the constrained cone projection.

    The numeric side minimizes along the ray of ``V'``: ``W' = w V'/|V'|``,
    ``c = +-gamma |w|``, by bounded Brent search over each branch.
    """
    if not gamma > 0:
        raise ArgumentError("gamma must be positive")
    if vprime_norm < 0:
        raise ArgumentError("vprime_norm must be nonnegative")
    if t < gamma * vprime_norm or t <= 0:
        raise ArgumentError("need t >= gamma |V'| (V outside the open cone) and t > 0")
    closed, c0 = cone_minimizer_closed_form(vprime_norm, t, gamma)
    span = 2.0 * (vprime_norm + t / gamma + t) + 1.0
    best = math.inf
    for sign in (1.0, -1.0):
        for lo, hi in ((0.0, span), (-span, 0.0)):
            def f(w, sign=sign):
                c = sign * gamma * abs(w)
                return 2.0 * (vprime_norm - w) ** 2 + (t - c) ** 2

            res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14 * span, "maxiter": 500})
            best = min(best, float(res.fun), f(lo), f(hi))
    return best, closed, c0
