"""Tangent frames, restricted positivity, tangent cones and the maximal aperture.

The cone of aperture ``gamma`` at a boundary point ``p`` consists of real
tangent vectors ``V = c + t * i nu`` (``c`` complex-tangential) with
``|t| <= gamma |c|``.  Boundary values of the delta-Hessian come from a
one-sided shell limit along the inward normal (see
:func:`levishell.distance.boundary_delta_hessian`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .distance import (
    BoundaryPoint,
    boundary_delta_hessian,
    boundary_delta_hessian_exact,
    project_to_boundary,
)
from .errors import ArgumentError, DomainError
from .geometry import (
    DomainSpec,
    HessianForms,
    complex_structure,
    complex_tangent_basis,
    to_real,
)
from .linalg import golden_section, jacobi_eigh, sphere_quadratic_min


@dataclass(frozen=True, eq=False)
class TangentFrame:
    point: BoundaryPoint
    normal: np.ndarray
    i_normal: np.ndarray
    ct_basis: np.ndarray   # (n-1, n) complex, Hermitian-orthonormal
    rt_basis: np.ndarray   # (2n-1, 2n) real, orthonormal; last row is i*nu

    @property
    def ct_real_basis(self) -> np.ndarray:
        return self.rt_basis[:-1]


@dataclass(frozen=True)
class ConeSpec:
    gamma: float
    gamma_cap: float = config.GAMMA_CAP

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ArgumentError("cone aperture must be nonnegative")


@dataclass(frozen=True, eq=False)
class PositivityReport:
    point: np.ndarray
    min_eig_L_CT: float
    min_eig_H_RT: float
    min_eig_H_CT: float
    min_eig_L_RT: float
    gamma_query: float
    cone_min: float
    max_gamma: float | None
    tol: float
    limit_crosscheck: float
    flags: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "point": [float(v) for v in self.point],
            "min_eig_L_CT": self.min_eig_L_CT,
            "min_eig_H_RT": self.min_eig_H_RT,
            "min_eig_H_CT": self.min_eig_H_CT,
            "min_eig_L_RT": self.min_eig_L_RT,
            "gamma_query": self.gamma_query,
            "cone_min": self.cone_min,
            "max_gamma": self.max_gamma,
            "tol": self.tol,
            "limit_crosscheck": self.limit_crosscheck,
            "flags": dict(self.flags),
        }


def _ensure_boundary_point(spec, p):
    if isinstance(p, BoundaryPoint):
        return p
    x = spec.function.check_point(p)
    j = spec.function.jet(x)
    g = np.array(j.g)
    gn = float(np.linalg.norm(g))
    if abs(float(j.v)) > 1e-10 * max(1.0, gn):
        raise DomainError("point is not on the boundary")
    return BoundaryPoint(x, g / gn, float(abs(j.v)), 0)


def tangent_frame(spec: DomainSpec, p) -> TangentFrame:
    p = _ensure_boundary_point(spec, p)
    nu = np.asarray(p.normal, float)
    if not np.isclose(np.linalg.norm(nu), 1.0, atol=1e-10):
        raise ArgumentError("degenerate normal at boundary point")
    n = spec.n
    J = complex_structure(n)
    inu = J @ nu
    ct = complex_tangent_basis(nu)
    rows = []
    for u in ct:
        rows.append(to_real(u))
        rows.append(to_real(1j * u))
    rows.append(inu)
    return TangentFrame(p, nu, inu, ct, np.array(rows).reshape(2 * n - 1, 2 * n))


def cone_membership(frame: TangentFrame, V, cone: ConeSpec) -> bool:
    v = to_real(V)
    vn = float(np.linalg.norm(v))
    if abs(float(v @ frame.normal)) > 1e-8 * max(vn, 1e-300):
        raise ArgumentError("vector is not in the real tangent space")
    if cone.gamma >= cone.gamma_cap:
        return True
    t = float(v @ frame.i_normal)
    c = v - t * frame.i_normal - float(v @ frame.normal) * frame.normal
    return abs(t) <= cone.gamma * float(np.linalg.norm(c)) * (1 + 1e-12) + 1e-15 * vn


def _form_matrix(forms: HessianForms, which: str) -> np.ndarray:
    if which == "H":
        return np.asarray(forms.H, float)
    if which == "L":
        return forms.levi_real
    raise ArgumentError(f"restricted eigenvalues need 'H' or 'L', got {which!r}")


def _real_basis(basis) -> np.ndarray:
    B = np.asarray(basis)
    if B.ndim == 1:
        B = B[None, :]
    if np.iscomplexobj(B):
        rows = []
        for u in B:
            rows.append(to_real(u))
            rows.append(to_real(1j * u))
        B = np.array(rows)
    return np.asarray(B, float)


def restricted_min_eig(forms: HessianForms, which: str, basis) -> float:
    """Minimal eigenvalue of H or L restricted to the span of an orthonormal basis.

    Real rows (length 2n) span a real subspace; complex rows (length n) span
    the complex subspace they generate.
    """
    B = _real_basis(basis)
    if len(B) == 0:
        return math.inf
    if B.shape[1] != 2 * forms.n:
        raise ArgumentError("basis vectors have the wrong dimension")
    if np.max(np.abs(B @ B.T - np.eye(len(B)))) > 1e-10:
        raise ArgumentError("basis is not orthonormal")
    M = _form_matrix(forms, which)
    w, _ = jacobi_eigh(B @ M @ B.T)
    return float(w[0])


class _ConeProblem:
    """Slices of the cone minimization: fixed normal fraction ``t``, sphere in CT."""

    def __init__(self, forms: HessianForms, frame: TangentFrame):
        M = forms.levi_real
        C = frame.ct_real_basis
        w = frame.i_normal
        self.A = C @ M @ C.T
        self.b = C @ M @ w
        self.c0 = float(w @ M @ w)
        self.w, self.Qv = jacobi_eigh(self.A)
        self.scale = float(np.linalg.norm(M, 2))

    def slice_min(self, t):
        rho = math.sqrt(max(1.0 - t * t, 0.0))
        val, _ = sphere_quadratic_min(self.w, self.Qv, t * self.b, rho)
        return val + t * t * self.c0


def cone_error_bound(resolution: int, form_norm: float) -> float:
    """Documented accuracy of :func:`cone_min` before refinement: ``|L| (2/R)^2``."""
    return form_norm * (2.0 / resolution) ** 2


def cone_min(forms: HessianForms, frame: TangentFrame, cone: ConeSpec,
             resolution: int = config.CONE_RESOLUTION, refine: bool = True) -> float:
    """Minimum of L(V, V) over unit V in the cone of aperture ``cone.gamma``."""
    if resolution < 16:
        raise ArgumentError("resolution must be >= 16")
    if forms.n < 2:
        raise ArgumentError("tangent cones need n >= 2")
    prob = _ConeProblem(forms, frame)
    g = cone.gamma
    T = g / math.sqrt(1.0 + g * g)
    if T == 0.0:
        return float(prob.slice_min(0.0))
    ts = np.linspace(-T, T, resolution)
    vals = np.array([prob.slice_min(t) for t in ts])
    i = int(np.argmin(vals))
    best = float(vals[i])
    if refine:
        a = ts[max(i - 1, 0)]
        b = ts[min(i + 1, resolution - 1)]
        _, fv = golden_section(prob.slice_min, a, b, config.GOLDEN_ITER)
        best = min(best, fv)
    return best


def boundary_forms(spec: DomainSpec, p) -> HessianForms:
    p = _ensure_boundary_point(spec, p)
    H = boundary_delta_hessian(spec, p)
    return HessianForms.from_real_hessian(H, p.point, f"delta[{spec.name}]")


def semidef_tol(forms: HessianForms, eps: float = config.SEMIDEF_EPS) -> float:
    return eps * (1.0 + forms.norm)


def _max_gamma(forms, frame, tol, cap=config.GAMMA_CAP, resolution=config.CONE_RESOLUTION):
    def ok(g):
        return cone_min(forms, frame, ConeSpec(g, cap), resolution) >= -tol

    if ok(cap):
        return cap
    lo = config.GAMMA_PROBE
    if not ok(lo):
        return 0.0
    hi = cap
    for _ in range(config.GAMMA_BISECT_ITER):
        if hi - lo <= config.GAMMA_BISECT_WIDTH:
            break
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo if lo >= config.GAMMA_FLOOR else 0.0


def max_gamma(spec: DomainSpec, p, tol: float | None = None,
              resolution: int = config.CONE_RESOLUTION, cap: float = config.GAMMA_CAP) -> float:
    """Largest aperture with L_delta >= -tol on the cone at ``p`` (0 .. cap).

    Apertures below ``GAMMA_FLOOR`` are reported as 0: at the semidefiniteness
    tolerance they cannot be told apart from the complex tangent space.
    """
    if tol is not None and not tol > 0:
        raise ArgumentError("tol must be positive")
    p = _ensure_boundary_point(spec, p)
    forms = boundary_forms(spec, p)
    frame = tangent_frame(spec, p)
    return _max_gamma(forms, frame, semidef_tol(forms) if tol is None else tol, cap, resolution)


def classify_boundary(spec: DomainSpec, p, gamma_query: float = 1.0,
                      with_max_gamma: bool = True, eps: float = config.SEMIDEF_EPS) -> PositivityReport:
    """Positivity data of delta at a boundary point (shell-limit Hessian)."""
    p = _ensure_boundary_point(spec, p)
    forms = boundary_forms(spec, p)
    frame = tangent_frame(spec, p)
    exact = boundary_delta_hessian_exact(spec, p)
    tol = semidef_tol(forms, eps)
    ct = frame.ct_real_basis
    rt = frame.rt_basis
    l_ct = restricted_min_eig(forms, "L", ct)
    h_rt = restricted_min_eig(forms, "H", rt)
    h_ct = restricted_min_eig(forms, "H", ct)
    l_rt = restricted_min_eig(forms, "L", rt)
    cmin = cone_min(forms, frame, ConeSpec(gamma_query))
    mg = _max_gamma(forms, frame, tol) if with_max_gamma else None
    flags = {
        "convex": bool(h_rt >= -tol),
        "c_convex": bool(h_ct >= -tol),
        "pseudoconvex": bool(l_ct >= -tol),
        "psh_on_boundary": bool(l_rt >= -tol),
        "gamma_psh": bool(cmin >= -tol),
    }
    return PositivityReport(
        point=p.point.copy(),
        min_eig_L_CT=l_ct,
        min_eig_H_RT=h_rt,
        min_eig_H_CT=h_ct,
        min_eig_L_RT=l_rt,
        gamma_query=float(gamma_query),
        cone_min=cmin,
        max_gamma=mg,
        tol=tol,
        limit_crosscheck=float(np.linalg.norm(forms.H - exact, 2)),
        flags=flags,
    )


def nearest_boundary_report(spec: DomainSpec, z, gamma_query: float = 1.0) -> PositivityReport:
    return classify_boundary(spec, project_to_boundary(spec, z), gamma_query)
