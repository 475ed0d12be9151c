"""Small dense eigensolver and the sphere-constrained quadratic minimizer."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq


def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Eigenvalues and eigenvectors of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ``w`` ascending and ``A @ V = V @ diag(w)``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n == 0:
        return np.zeros(0), V
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = float((A[q, q] - A[p, p]) / (2.0 * apq))
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sphere_quadratic_min(w, Qv, g, rho):
    """Minimize ``x.A.x + 2 g.x`` over ``|x| = rho``, with ``A = Qv diag(w) Qv^T``.

    Global minimizer from the secular equation ``sum beta_i^2/(w_i - mu)^2 = rho^2``
    with ``mu <= min(w)``; the hard case (gradient orthogonal to the lowest
    eigenspace) is handled explicitly.  Returns ``(value, x)``.
    """
    g = np.asarray(g, dtype=float)
    k = len(w)
    if k == 0:
        return 0.0, np.zeros(0)
    beta = Qv.T @ g
    wmin = w[0]
    spread = max(abs(w[-1] - wmin), 1.0)
    low = np.abs(w - wmin) <= 1e-12 * spread
    gnorm = float(np.linalg.norm(beta))
    if gnorm == 0.0 or rho == 0.0:
        x = Qv[:, 0] * rho
        return float(wmin * rho * rho), x

    def value(y):
        return float(np.sum(w * y * y) + 2.0 * np.sum(beta * y))

    candidates = []
    if np.all(np.abs(beta[low]) <= 1e-14 * gnorm):
        # hard case: mu = wmin if the remaining components fit inside the sphere
        y = np.zeros(k)
        hi = ~low
        y[hi] = -beta[hi] / (w[hi] - wmin)
        r2 = rho * rho - float(np.sum(y * y))
        if r2 >= 0.0:
            y[np.nonzero(low)[0][0]] = math.sqrt(r2)
            candidates.append(y)

    def phi(mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = float(np.sqrt(np.sum((beta / (w - mu)) ** 2)))
        return (r if np.isfinite(r) else math.inf) - rho

    # |beta / (w - mu)| <= gnorm / (wmin - mu), so phi(lo) <= -rho/2
    lo = wmin - 2.0 * gnorm / rho
    hi_mu = wmin
    # approach wmin from below until phi > 0
    step = 2.0 * gnorm / rho
    top = None
    for _ in range(200):
        step *= 0.5
        trial = hi_mu - step
        if trial <= lo:
            continue
        if phi(trial) > 0.0:
            top = trial
            break
        lo = trial
    if top is not None and phi(lo) <= 0.0:
        mu = brentq(phi, lo, top, xtol=1e-15 * spread, rtol=4 * np.finfo(float).eps, maxiter=500)
        y = -beta / (w - mu)
        y *= rho / np.linalg.norm(y)
        candidates.append(y)
    if not candidates:
        # numerically hard case with tiny lowest component
        y = np.zeros(k)
        hi = ~low
        y[hi] = -beta[hi] / (w[hi] - wmin)
        nrm = float(np.linalg.norm(y))
        if nrm > rho:
            y *= rho / nrm
        else:
            rest = math.sqrt(rho * rho - nrm * nrm)
            bl = beta[low]
            bn = float(np.linalg.norm(bl))
            if bn > 0.0:
                y[low] = -rest * bl / bn
            else:
                y[np.nonzero(low)[0][0]] = rest
        candidates.append(y)
    best = min(candidates, key=value)
    return float(value(best)), Qv @ best


def golden_section(fun, a, b, iters=60):
    """Minimum of ``fun`` on ``[a, b]`` by golden-section search; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if b - a <= 1e-15 * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)
