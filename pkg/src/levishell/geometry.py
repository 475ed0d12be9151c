"""Defining functions with their Hessian forms, over the identification of C^n with R^2n.

Coordinates are fixed once: complex coordinate ``k`` (0-based) has real part
at index ``2k`` and imaginary part at index ``2k+1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import config
from .errors import ArgumentError, DomainError, SpecError
from .expr import Expr, Jet, affine_substitution


# ---------------------------------------------------------------------------
# identification C^n <-> R^2n
# ---------------------------------------------------------------------------


def to_real(V) -> np.ndarray:
    V = np.asarray(V, dtype=complex)
    out = np.empty(V.shape[:-1] + (2 * V.shape[-1],))
    out[..., 0::2] = V.real
    out[..., 1::2] = V.imag
    return out


def to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise ArgumentError("real vector length must be even")
    return x[..., 0::2] + 1j * x[..., 1::2]


def complex_structure(n: int) -> np.ndarray:
    """Real 2n x 2n matrix of multiplication by i."""
    J = np.zeros((2 * n, 2 * n))
    for k in range(n):
        J[2 * k, 2 * k + 1] = -1.0
        J[2 * k + 1, 2 * k] = 1.0
    return J


def realify(U) -> np.ndarray:
    """Real 2n x 2n matrix of the complex-linear map ``U``."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    R = np.zeros((2 * n, 2 * n))
    R[0::2, 0::2] = U.real
    R[0::2, 1::2] = -U.imag
    R[1::2, 0::2] = U.imag
    R[1::2, 1::2] = U.real
    return R


def levi_matrix_real(H) -> np.ndarray:
    """Real symmetric matrix of ``V -> L(V, V)``, using H(V,V) + H(iV,iV) = 4 L(V,V)."""
    H = np.asarray(H, dtype=float)
    J = complex_structure(H.shape[0] // 2)
    M = (H + J.T @ H @ J) / 4.0
    return (M + M.T) / 2.0


def complex_gradient(g) -> np.ndarray:
    """``f_{z_k} = (f_x - i f_y) / 2`` from a real gradient."""
    g = np.asarray(g, dtype=float)
    return 0.5 * (g[..., 0::2] - 1j * g[..., 1::2])


def complex_tangent_basis(nu) -> np.ndarray:
    """Hermitian-orthonormal basis (rows) of the complex orthogonal complement of ``nu``.

    ``nu`` is a real unit normal in R^2n; the complement is {V : sum r_{z_k} V_k = 0}.
    Gram-Schmidt runs over e_1 .. e_n in order, dropping the vector most parallel
    to the normal, so a normal along e_n yields e_1 .. e_{n-1} exactly.
    """
    nc = to_complex(nu)
    nc = nc / np.linalg.norm(nc)
    n = nc.shape[0]
    drop = int(np.argmax(np.abs(nc)))
    basis = [nc]
    for k in range(n):
        if k == drop:
            continue
        v = np.zeros(n, complex)
        v[k] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - (b.conj() @ v) * b
        v = v / np.linalg.norm(v)
        basis.append(v)
    return np.array(basis[1:]).reshape(n - 1, n)


def complex_gradient_gram(g) -> np.ndarray:
    """Real symmetric matrix of ``v -> |<df, V>|^2`` for real gradient ``g``."""
    g = np.asarray(g, dtype=float)
    J = complex_structure(g.shape[0] // 2)
    a = 0.5 * g
    b = 0.5 * (J.T @ g)
    return np.outer(a, a) + np.outer(b, b)


# ---------------------------------------------------------------------------
# defining functions
# ---------------------------------------------------------------------------


def _as_bbox(bbox, n):
    arr = np.asarray(bbox, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (2 * n, 1))
    if arr.shape != (2 * n, 2):
        raise SpecError(f"expected {2 * n} [lo, hi] pairs or a single pair", "bbox")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise SpecError("each interval needs lo < hi", "bbox")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


@dataclass(frozen=True)
class DefiningFunction:
    name: str
    n: int
    expr: Expr
    bbox: tuple

    def __post_init__(self):
        if self.n < 1:
            raise SpecError("n must be >= 1", "n")
        object.__setattr__(self, "bbox", _as_bbox(self.bbox, self.n))
        if self.expr.max_var() >= 2 * self.n:
            raise SpecError("expression uses coordinates beyond 2n", "expression")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @cached_property
    def bounds(self) -> np.ndarray:
        return np.array(self.bbox)

    def contains(self, x, slack: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        b = self.bounds
        return np.all((x >= b[:, 0] - slack) & (x <= b[:, 1] + slack), axis=-1)

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ArgumentError(f"point has {x.shape[-1]} coordinates, expected {self.dim}")
        if not np.all(self.contains(x)):
            raise DomainError(f"point outside bounding box of {self.name!r}")
        return x

    def value(self, x):
        """Batched value, no bounding-box check."""
        x = np.asarray(x, dtype=float)
        env = [x[..., i] for i in range(self.dim)]
        v = self.expr.evaluate(env)
        return np.broadcast_to(np.asarray(v, dtype=float), x.shape[:-1]).copy()

    def jet(self, x) -> Jet:
        """Batched value, gradient, Hessian, no bounding-box check."""
        x = np.asarray(x, dtype=float)
        out = self.expr.evaluate(Jet.seeds(x))
        if not isinstance(out, Jet):  # constant expression
            shape = x.shape[:-1]
            return Jet(
                np.full(shape, float(out)),
                np.zeros(shape + (self.dim,)),
                np.zeros(shape + (self.dim, self.dim)),
            )
        batch = x.shape[:-1]
        H = np.zeros(batch + (self.dim, self.dim)) if out.H is None else out.H
        return Jet(
            np.broadcast_to(out.v, batch).astype(float),
            np.broadcast_to(out.g, batch + (self.dim,)).astype(float),
            np.broadcast_to(H, batch + (self.dim, self.dim)).astype(float),
        )


def eval_derivatives(f: DefiningFunction, z):
    """Exact value, real gradient and real Hessian of ``f`` at ``z``."""
    z = f.check_point(z)
    j = f.jet(z)
    return float(j.v), np.array(j.g), np.array(j.H)


# ---------------------------------------------------------------------------
# Hessian forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HessianForms:
    """Real Hessian ``H``, Levi matrix ``L`` (f_{z_k zbar_l}), complement ``Q`` (f_{z_k z_l})."""

    H: np.ndarray
    L: np.ndarray
    Q: np.ndarray
    point: np.ndarray = field(default=None)
    function_id: str = ""

    @classmethod
    def from_real_hessian(cls, H, point=None, function_id=""):
        H = np.asarray(H, dtype=float)
        Hxx = H[0::2, 0::2]
        Hxy = H[0::2, 1::2]
        Hyx = H[1::2, 0::2]
        Hyy = H[1::2, 1::2]
        L = 0.25 * (Hxx + Hyy + 1j * (Hxy - Hyx))
        Q = 0.25 * (Hxx - Hyy - 1j * (Hxy + Hyx))
        pt = None if point is None else np.asarray(point, dtype=float)
        return cls(H, L, Q, pt, function_id)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @cached_property
    def levi_real(self) -> np.ndarray:
        return levi_matrix_real(self.H)

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.H, 2))


def hessian_forms(f: DefiningFunction, z) -> HessianForms:
    _, _, H = eval_derivatives(f, z)
    return HessianForms.from_real_hessian(H, z, f.name)


def _vec(A, n):
    A = np.asarray(A, dtype=complex)
    if A.shape != (n,):
        raise ArgumentError(f"vector has shape {A.shape}, expected ({n},)")
    return A


def apply_form(forms: HessianForms, which: str, A, B):
    """Evaluate the named form (``"H"``, ``"L"``, ``"Q"``) on the complex vectors ``A``, ``B``.

    ``H(A, B)`` takes its real part from the real Hessian matrix verbatim and
    its imaginary part ``2 Im L(A, B)``, which is the complex expansion
    ``2 Re(sum f_{z_k z_l} A_k B_l) + 2 sum f_{z_k zbar_l} A_k conj(B_l)``.
    """
    n = forms.n
    A = _vec(A, n)
    B = _vec(B, n)
    if which == "L":
        return complex(A @ forms.L @ B.conj())
    if which == "Q":
        return float(np.real(A @ forms.Q @ B))
    if which == "H":
        re = float(to_real(A) @ forms.H @ to_real(B))
        lev = A @ forms.L @ B.conj()
        return complex(re, 2.0 * lev.imag)
    raise ArgumentError(f"unknown form {which!r}; expected H, L or Q")


def check_4L_identity(forms: HessianForms, A, B) -> complex:
    """Residual ``H(A,B) + H(iA,iB) - 4 L(A,B)``."""
    A = _vec(A, forms.n)
    B = _vec(B, forms.n)
    return (
        apply_form(forms, "H", A, B)
        + apply_form(forms, "H", 1j * A, 1j * B)
        - 4.0 * apply_form(forms, "L", A, B)
    )


def taylor_residual(f: DefiningFunction, p, W) -> float:
    """``f(p+W) - [f(p) + 2 Re<df(p), W> + Q(W,W) + L(W,W)]``."""
    p = f.check_point(p)
    W = _vec(W, f.n)
    q = f.check_point(p + to_real(W))
    value, grad, H = eval_derivatives(f, p)
    forms = HessianForms.from_real_hessian(H, p, f.name)
    first = 2.0 * np.real(complex_gradient(grad) @ W)
    second = apply_form(forms, "Q", W, W) + apply_form(forms, "L", W, W).real
    return float(f.value(q)) - (value + first + second)


# ---------------------------------------------------------------------------
# domain descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """A domain ``{r < 0}`` restricted to a bounding box.

    ``scale`` is a length scale of the boundary curvature; the default shell
    width is ``SHELL_FRACTION * scale``.
    """

    function: DefiningFunction
    source: str
    params: tuple = ()
    shell_width: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise SpecError("must be positive", "scale")
        if self.shell_width == 0.0:
            object.__setattr__(self, "shell_width", config.SHELL_FRACTION * self.scale)
        if not self.shell_width > 0:
            raise SpecError("must be positive", "shell_width")

    @property
    def name(self) -> str:
        return self.function.name

    @property
    def n(self) -> int:
        return self.function.n

    @property
    def bbox(self):
        return self.function.bbox

    @cached_property
    def seed_pool(self) -> np.ndarray:
        """Deterministic boundary samples used as projection seeds."""
        from .distance import sample_boundary_points

        return sample_boundary_points(self, config.SEED_POOL_SIZE, seed=0)

    def validate(self) -> "DomainSpec":
        """Check the zero set is nonempty and regular inside the box."""
        f = self.function
        rng = np.random.default_rng(12345)
        b = f.bounds
        pts = b[:, 0] + (b[:, 1] - b[:, 0]) * rng.random((4096, f.dim))
        vals = f.value(pts)
        if not (vals.min() < 0.0 < vals.max()):
            raise SpecError("defining function does not change sign in the box", "bbox")
        pool = self.seed_pool
        if len(pool) == 0:
            raise SpecError("zero set is empty inside the box", "bbox")
        j = f.jet(pool)
        gnorm = np.linalg.norm(j.g, axis=-1)
        if np.any(gnorm < 1e-6):
            raise SpecError("gradient vanishes on the zero set", "expression")
        return self


def unitary_transform(spec: DomainSpec, U, shift=None) -> DomainSpec:
    """Domain whose defining function is ``r(U w + shift)``."""
    U = np.asarray(U, dtype=complex)
    n = spec.n
    if U.shape != (n, n):
        raise ArgumentError(f"U must be {n}x{n}")
    if np.max(np.abs(U.conj().T @ U - np.eye(n))) > 1e-12:
        raise ArgumentError("U is not unitary")
    shift = np.zeros(n, complex) if shift is None else _vec(shift, n)
    if np.array_equal(U, np.eye(n)) and not np.any(shift):
        return spec
    R = realify(U)
    s = to_real(shift)
    expr = affine_substitution(spec.function.expr, R, s)
    b = spec.function.bounds
    center = R.T @ ((b[:, 0] + b[:, 1]) / 2.0 - s)
    radius = float(np.linalg.norm((b[:, 1] - b[:, 0]) / 2.0))
    bbox = [(c - radius, c + radius) for c in center]
    f = DefiningFunction(f"{spec.name}@U", n, expr, bbox)
    return DomainSpec(f, str(expr), spec.params, spec.shell_width, spec.scale)
