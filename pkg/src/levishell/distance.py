"""Signed distance, closest-point projection and Hessian data of delta and delta^2.

Projection solves the closest-point conditions ``r(q) = 0``,
``q - z + lam * grad r(q) = 0`` by Lagrange-Newton from several seeds and
keeps the nearest converged candidate.  The gradient of delta is the unit
normal at the projection; its Hessian is a central difference of that normal
field, which is exact to machine precision, so only one differentiation level
of noise enters.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import (
    AccuracyError,
    AmbiguityError,
    ArgumentError,
    ConvergenceError,
    SamplingError,
    SingularPointError,
)
from .geometry import (
    DomainSpec,
    HessianForms,
    complex_tangent_basis,
    realify,
    to_complex,
    to_real,
)


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    point: np.ndarray
    normal: np.ndarray
    residual: float
    iterations: int
    within_shell: bool = True


@dataclass(frozen=True, eq=False)
class ShellSample:
    point: np.ndarray
    projection: BoundaryPoint
    delta: float
    gradient: np.ndarray
    delta_forms: HessianForms
    D_forms: HessianForms
    annihilation: float


@dataclass(frozen=True, eq=False)
class AdaptedFrame:
    """New coordinates ``w`` with ``z = base_point + realify(unitary) @ w``."""

    base_point: np.ndarray
    unitary: np.ndarray
    translation: np.ndarray
    depth: float
    residuals: dict

    def to_adapted(self, z):
        R = realify(self.unitary)
        return R.T @ (np.asarray(z, float) - self.translation)

    def from_adapted(self, w):
        R = realify(self.unitary)
        return self.translation + R @ np.asarray(w, float)


# ---------------------------------------------------------------------------
# boundary samples and seeds
# ---------------------------------------------------------------------------


def _gradient_project(f, x, iters=60):
    q = np.array(x, dtype=float)
    for _ in range(iters):
        j = f.jet(q)
        gg = np.einsum("...i,...i->...", j.g, j.g)
        gg = np.where(gg > 0, gg, np.inf)
        q = q - (j.v / gg)[..., None] * j.g
    return q


def sample_boundary_points(spec: DomainSpec, count: int, seed: int = 0,
                           center=None, radius=None) -> np.ndarray:
    """Points of the zero set inside the box, from projected uniform samples.

    With ``center`` and ``radius`` the starting points are drawn around
    ``center`` and only zeros within ``radius`` of it are kept.
    """
    f = spec.function
    b = f.bounds
    rng = np.random.default_rng(seed)
    kept = []
    total = 0
    for _ in range(50):
        if center is None:
            x = b[:, 0] + (b[:, 1] - b[:, 0]) * rng.random((count, f.dim))
        else:
            d = rng.normal(size=(count, f.dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            rad = radius * rng.random(count) ** (1.0 / f.dim)
            x = np.asarray(center, float) + d * rad[:, None]
        q = _gradient_project(f, x)
        with np.errstate(invalid="ignore"):
            j = f.jet(q)
            gnorm = np.linalg.norm(j.g, axis=-1)
            ok = np.isfinite(j.v) & (np.abs(j.v) <= 1e-12 * np.maximum(1.0, gnorm))
        ok &= f.contains(q, slack=0.0)
        if center is not None:
            ok &= np.linalg.norm(q - np.asarray(center, float), axis=1) <= radius
        kept.append(q[ok])
        total += int(ok.sum())
        if total >= count:
            break
    pts = np.concatenate(kept)[:count] if kept else np.zeros((0, f.dim))
    return pts


# ---------------------------------------------------------------------------
# Lagrange-Newton
# ---------------------------------------------------------------------------


def _solve_batch(K, rhs):
    try:
        return np.linalg.solve(K, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(rhs)
        for i in range(len(K)):
            out[i] = np.linalg.lstsq(K[i], rhs[i], rcond=None)[0]
        return out


def _newton_batch(spec: DomainSpec, z, q0):
    """Lagrange-Newton for the closest point to ``z`` (each row) from ``q0`` (each row).

    Returns ``(q, converged, iterations)``.
    """
    f = spec.function
    m = f.dim
    q = np.array(q0, dtype=float)
    z = np.broadcast_to(np.asarray(z, dtype=float), q.shape)
    B = q.shape[0]
    j = f.jet(q)
    gg = np.einsum("bi,bi->b", j.g, j.g)
    lam = np.einsum("bi,bi->b", z - q, j.g) / np.where(gg > 0, gg, 1.0)
    active = np.ones(B, bool)
    converged = np.zeros(B, bool)
    iters = np.zeros(B, int)
    bmin, bmax = f.bounds[:, 0], f.bounds[:, 1]
    max_step = 0.25 * float(np.linalg.norm(bmax - bmin))
    tol = config.NEWTON_TOL * max(1.0, spec.scale)
    eye = np.eye(m)
    for it in range(config.NEWTON_MAX_ITER + 1):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        qa = q[idx]
        with np.errstate(all="ignore"):
            j = f.jet(qa)
            gnorm = np.linalg.norm(j.g, axis=1)
            F1 = qa - z[idx] + lam[idx, None] * j.g
            F2 = j.v
            res = np.linalg.norm(F1, axis=1) + np.abs(F2) / np.where(gnorm > 0, gnorm, 1.0)
        bad = ~np.isfinite(res) | ~f.contains(qa)
        done = ~bad & (res <= tol)
        converged[idx[done]] = True
        active[idx[bad | done]] = False
        go = ~(bad | done)
        if not go.any() or it == config.NEWTON_MAX_ITER:
            break
        idx = idx[go]
        Hg, gg_, F1, F2 = j.H[go], j.g[go], F1[go], F2[go]
        K = np.zeros((len(idx), m + 1, m + 1))
        K[:, :m, :m] = eye + lam[idx, None, None] * Hg
        K[:, :m, m] = gg_
        K[:, m, :m] = gg_
        rhs = -np.concatenate([F1, F2[:, None]], axis=1)
        with np.errstate(all="ignore"):
            step = _solve_batch(K, rhs)
        dq = step[:, :m]
        norm = np.linalg.norm(dq, axis=1)
        shrink = np.where(norm > max_step, max_step / np.where(norm > 0, norm, 1.0), 1.0)
        q[idx] += dq * shrink[:, None]
        lam[idx] += step[:, m] * shrink
        iters[idx] += 1
    return q, converged, iters


def _seeds(spec: DomainSpec, z, seed, zq=None):
    f = spec.function
    pool = spec.seed_pool
    if zq is None:
        zq = _gradient_project(f, z[None, :], iters=20)[0]
    seeds = [z, zq]
    if len(pool):
        d = np.linalg.norm(pool - z, axis=1)
        n_near = config.MULTISTART_SEEDS - 2 - 6
        order = np.argsort(d, kind="stable")
        seeds.extend(pool[order[:n_near]])
        rest = order[n_near:]
        if len(rest):
            rng = np.random.default_rng(seed)
            pick = rng.choice(len(rest), size=min(6, len(rest)), replace=False)
            seeds.extend(pool[rest[np.sort(pick)]])
    seeds = np.array(seeds)
    finite = np.all(np.isfinite(seeds), axis=1)
    return seeds[finite]


def _boundary_point(spec, q, iterations, distance):
    j = spec.function.jet(q)
    g = np.array(j.g)
    return BoundaryPoint(
        point=np.array(q),
        normal=g / np.linalg.norm(g),
        residual=float(abs(j.v)),
        iterations=int(iterations),
        within_shell=bool(distance <= spec.shell_width * (1 + 1e-9)),
    )


def _select(spec, z, q, ok, iters):
    if not ok.any():
        raise ConvergenceError("closest-point Newton failed from every seed")
    q, iters = q[ok], iters[ok]
    d = np.linalg.norm(q - z, axis=1)
    order = np.argsort(d, kind="stable")
    best = order[0]
    for k in order[1:]:
        if d[k] - d[best] > config.AMBIGUITY_GAP:
            break
        if np.linalg.norm(q[k] - q[best]) > config.DISTINCT_POINT_TOL * spec.scale:
            raise AmbiguityError(
                f"two nearest boundary points at distance {d[best]:.12g}; "
                "point is outside the tubular neighborhood"
            )
    return _boundary_point(spec, q[best], iters[best], d[best])


def project_to_boundary(spec: DomainSpec, z, seed: int = 0) -> BoundaryPoint:
    """Nearest boundary point to ``z`` by multistart Lagrange-Newton."""
    z = spec.function.check_point(z)
    seeds = _seeds(spec, z, seed)
    q, ok, iters = _newton_batch(spec, z, seeds)
    return _select(spec, z, q, ok, iters)


def project_many(spec: DomainSpec, Z, seed: int = 0, errors: bool = True) -> list:
    """``project_to_boundary`` for each row of ``Z`` in one batched Newton solve.

    Rows are solved independently, so results agree with the one-point call.
    With ``errors=False`` failed rows give None instead of raising.
    """
    f = spec.function
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if len(Z) == 0:
        return []
    if not errors:
        inside = f.contains(Z)
    else:
        for z in Z:
            f.check_point(z)
        inside = np.ones(len(Z), bool)
    ZQ = _gradient_project(f, Z, iters=20)
    groups = [_seeds(spec, Z[i], seed, ZQ[i]) if inside[i] else np.zeros((0, f.dim))
              for i in range(len(Z))]
    sizes = [len(g) for g in groups]
    S = np.concatenate(groups)
    T = np.repeat(Z, sizes, axis=0)
    q, ok, iters = _newton_batch(spec, T, S)
    out = []
    start = 0
    for i, k in enumerate(sizes):
        sl = slice(start, start + k)
        start += k
        try:
            if k == 0:
                raise ConvergenceError("point outside the bounding box")
            out.append(_select(spec, Z[i], q[sl], ok[sl], iters[sl]))
        except (AmbiguityError, ConvergenceError):
            if errors:
                raise
            out.append(None)
    return out


def _signed(spec, z, bp):
    dist = float(np.linalg.norm(np.asarray(z) - bp.point))
    return -dist if float(spec.function.value(z)) < 0.0 else dist


def signed_distance(spec: DomainSpec, z, seed: int = 0) -> float:
    z = spec.function.check_point(z)
    return _signed(spec, z, project_to_boundary(spec, z, seed))


def delta_gradient(spec: DomainSpec, z, seed: int = 0) -> np.ndarray:
    """Unit outward normal at b(z), which is the gradient of delta at z."""
    return project_to_boundary(spec, z, seed).normal.copy()


def _local_normals(spec, pts, q0):
    """Projections and normals of points near a known projection ``q0``."""
    q, ok, _ = _newton_batch(spec, pts, np.tile(q0, (len(pts), 1)))
    if not ok.all():
        raise ConvergenceError("local closest-point Newton failed near the base point")
    g = spec.function.jet(q).g
    return q, g / np.linalg.norm(g, axis=1, keepdims=True)


def _fd_step(spec, step):
    return (config.FD_STEP * spec.scale) if step is None else float(step)


def _delta_hessian_matrix(spec, z, bp, step):
    m = spec.function.dim
    h = _fd_step(spec, step)
    E = np.eye(m) * h
    pts = np.concatenate([z + E, z - E])
    _, nu = _local_normals(spec, pts, bp.point)
    H = (nu[:m] - nu[m:]).T / (2 * h)
    return (H + H.T) / 2.0


def _annihilation(H, nu):
    return float(np.linalg.norm(H @ nu))


def delta_hessian(spec: DomainSpec, z, seed: int = 0, step=None) -> HessianForms:
    """Hessian forms of delta at ``z`` from central differences of the normal field."""
    z = spec.function.check_point(z)
    bp = project_to_boundary(spec, z, seed)
    H = _delta_hessian_matrix(spec, z, bp, step)
    res = _annihilation(H, bp.normal)
    if res > config.NORMAL_ANNIHILATION_FAIL * (1.0 + np.linalg.norm(H, 2)):
        raise AccuracyError(f"delta-Hessian does not annihilate the normal (residual {res:.3g})")
    return HessianForms.from_real_hessian(H, z, f"delta[{spec.name}]")


def _D_hessian(delta, nu, Hd):
    gD = 2.0 * delta * nu
    D = delta * delta
    HD = np.outer(gD, gD) / (2.0 * D) + 2.0 * delta * Hd
    return D, gD, (HD + HD.T) / 2.0


def D_forms(spec: DomainSpec, z, seed: int = 0, check: bool = True):
    """``(D, grad D, HessianForms of D)`` for ``D = delta^2``, by the chain rule.

    With ``check`` the Hessian is compared against central differences of
    ``grad D = 2 delta nu`` and a mismatch beyond ``D_FORMS_CHECK_RTOL``
    raises :class:`AccuracyError`.
    """
    z = spec.function.check_point(z)
    bp = project_to_boundary(spec, z, seed)
    delta = _signed(spec, z, bp)
    if abs(delta) <= 1e-14 * spec.scale:
        raise SingularPointError("D-forms are undefined on the boundary")
    Hd = _delta_hessian_matrix(spec, z, bp, None)
    D, gD, HD = _D_hessian(delta, bp.normal, Hd)
    if check:
        HD_fd = _D_hessian_fd(spec, z, bp)
        err = np.linalg.norm(HD - HD_fd, 2)
        if err > config.D_FORMS_CHECK_RTOL * (1.0 + np.linalg.norm(HD, 2)):
            raise AccuracyError(f"chain-rule D-Hessian disagrees with finite differences ({err:.3g})")
    return D, gD, HessianForms.from_real_hessian(HD, z, f"D[{spec.name}]")


def _D_hessian_fd(spec, z, bp):
    m = spec.function.dim
    h = _fd_step(spec, None)
    E = np.eye(m) * h
    pts = np.concatenate([z + E, z - E])
    q, nu = _local_normals(spec, pts, bp.point)
    dist = np.linalg.norm(pts - q, axis=1)
    sign = np.where(spec.function.value(pts) < 0.0, -1.0, 1.0)
    gD = 2.0 * (sign * dist)[:, None] * nu
    H = (gD[:m] - gD[m:]).T / (2 * h)
    return (H + H.T) / 2.0


def shell_sample(spec: DomainSpec, z, seed: int = 0, bp: BoundaryPoint | None = None) -> ShellSample:
    """All distance data at one point off the boundary."""
    z = spec.function.check_point(z)
    if bp is None:
        bp = project_to_boundary(spec, z, seed)
    delta = _signed(spec, z, bp)
    if abs(delta) <= 1e-14 * spec.scale:
        raise SingularPointError("shell samples must lie off the boundary")
    Hd = _delta_hessian_matrix(spec, z, bp, None)
    res = _annihilation(Hd, bp.normal)
    if res > config.NORMAL_ANNIHILATION_FAIL * (1.0 + np.linalg.norm(Hd, 2)):
        raise AccuracyError(f"delta-Hessian does not annihilate the normal (residual {res:.3g})")
    _, _, HD = _D_hessian(delta, bp.normal, Hd)
    return ShellSample(
        point=z,
        projection=bp,
        delta=delta,
        gradient=bp.normal.copy(),
        delta_forms=HessianForms.from_real_hessian(Hd, z, f"delta[{spec.name}]"),
        D_forms=HessianForms.from_real_hessian(HD, z, f"D[{spec.name}]"),
        annihilation=res,
    )


def boundary_delta_hessian(spec: DomainSpec, p: BoundaryPoint) -> np.ndarray:
    """Real Hessian of delta at a boundary point as a one-sided shell limit.

    Evaluated at offsets ``eps``, ``2 eps``, ``4 eps`` along the inward normal
    and extrapolated to the boundary with a quadratic in the offset.
    """
    eps = config.BOUNDARY_OFFSET * spec.scale
    mats = []
    for t in (eps, 2 * eps, 4 * eps):
        z = p.point - t * p.normal
        mats.append(_delta_hessian_matrix(spec, z, p, None))
    H = (8.0 * mats[0] - 6.0 * mats[1] + mats[2]) / 3.0
    return (H + H.T) / 2.0


def boundary_delta_hessian_exact(spec: DomainSpec, p: BoundaryPoint) -> np.ndarray:
    """``P (hess r) P / |grad r|`` with P the tangential projector."""
    j = spec.function.jet(p.point)
    g = np.array(j.g)
    nu = g / np.linalg.norm(g)
    P = np.eye(len(g)) - np.outer(nu, nu)
    return P @ np.array(j.H) @ P / np.linalg.norm(g)


def adapted_frame(spec: DomainSpec, q_interior, seed: int = 0) -> AdaptedFrame:
    """C-affine coordinates putting b(q) at 0 and q at (0', a), a = delta(q) < 0."""
    q = spec.function.check_point(q_interior)
    bp = project_to_boundary(spec, q, seed)
    delta = _signed(spec, q, bp)
    if delta >= 0:
        raise ArgumentError("adapted frames need an interior point")
    n = spec.n
    ct = complex_tangent_basis(bp.normal)
    nc = to_complex(bp.normal)
    U = np.column_stack(list(ct) + [nc / np.linalg.norm(nc)])
    frame = AdaptedFrame(bp.point.copy(), U, bp.point.copy(), delta, {})
    R = realify(U)
    target = np.zeros(2 * n)
    target[2 * n - 2] = delta
    res_q = float(np.linalg.norm(frame.to_adapted(q) - target))
    e = np.zeros(2 * n)
    e[2 * n - 2] = 1.0
    grad_res = 0.0
    for t in (delta, 0.5 * delta):
        x = bp.point + t * bp.normal
        g = delta_gradient(spec, x, seed)
        grad_res = max(grad_res, float(np.linalg.norm(R.T @ g - e)))
    residuals = {
        "unitarity": float(np.max(np.abs(U.conj().T @ U - np.eye(n)))),
        "point": res_q,
        "base": float(np.linalg.norm(frame.to_adapted(bp.point))),
        "gradient": grad_res,
    }
    return AdaptedFrame(bp.point.copy(), U, bp.point.copy(), delta, residuals)


# ---------------------------------------------------------------------------
# shell sampling
# ---------------------------------------------------------------------------


def sample_shell(spec: DomainSpec, count: int, seed: int, width: float | None = None,
                 side: str = "inside", jobs: int = 1, center=None, radius=None,
                 max_batches: int = 200):
    """Uniform rejection samples of the one-sided shell ``0 < -+delta <= width``.

    Returns a list of ``(z, BoundaryPoint, delta)`` in a canonical order that
    does not depend on ``jobs``.
    """
    if side not in ("inside", "outside"):
        raise ArgumentError("side must be 'inside' or 'outside'")
    width = spec.shell_width if width is None else float(width)
    f = spec.function
    b = f.bounds
    rng = np.random.default_rng(seed)
    sign = -1.0 if side == "inside" else 1.0
    out = []
    batch = 4096
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        for _ in range(max_batches):
            if center is None:
                x = b[:, 0] + (b[:, 1] - b[:, 0]) * rng.random((batch, f.dim))
            else:
                d = rng.normal(size=(batch, f.dim))
                d /= np.linalg.norm(d, axis=1, keepdims=True)
                x = np.asarray(center, float) + d * (radius * rng.random(batch) ** (1.0 / f.dim))[:, None]
                x = x[f.contains(x, slack=0.0)]
            j = f.jet(x)
            est = j.v / np.linalg.norm(j.g, axis=1)
            keep = (sign * est > 0) & (np.abs(est) <= 2.0 * width)
            cand = x[keep]
            chunks = [cand[i:i + 64] for i in range(0, len(cand), 64)]
            proj = lambda c: project_many(spec, c, errors=False)  # noqa: E731
            mapped = map(proj, chunks) if pool is None else pool.map(proj, chunks)
            bps = [bp for chunk in mapped for bp in chunk]
            for z, bp in zip(cand, bps):
                if bp is None or not f.contains(bp.point, slack=0.0):
                    continue
                delta = _signed(spec, z, bp)
                if sign * delta > 0 and abs(delta) <= width:
                    if center is not None and np.linalg.norm(bp.point - np.asarray(center, float)) > radius:
                        continue
                    out.append((z, bp, delta))
                    if len(out) == count:
                        return out
    finally:
        if pool is not None:
            pool.shutdown()
    raise SamplingError(f"only {len(out)} of {count} shell samples found; shell too thin?")
