"""Second-order forward-mode differentiation over a small expression language.

Expressions are trees of :class:`Expr` nodes in the real coordinates
``x1 .. x2n`` of C^n, where ``z_k = x_{2k-1} + i x_{2k}``.  Evaluating a tree
on :class:`Jet` seeds propagates all derivatives up to second order exactly (no
finite differences); evaluating it on plain floats or numpy arrays gives the
value only, batched.

The surface syntax accepted by :func:`parse_expression` is a Python
expression built from

* numbers and named parameters,
* ``x1 .. x2n``, ``re(zk)``, ``im(zk)``, ``abs2(zk)`` (``|z_k|^2``),
* ``+ - *``, division by constants, ``**`` with nonnegative integer exponents,
* ``exp(...)``.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SpecError


def _hadd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


class Jet:
    """Derivatives up to order two of a scalar, with optional leading batch axes.

    ``H is None`` stands for a zero Hessian (affine jets).
    """

    __slots__ = ("v", "g", "H")

    def __init__(self, v, g, H=None):
        self.v = v
        self.g = g
        self.H = H

    @classmethod
    def seeds(cls, x):
        """Independent-variable jets for the points ``x`` (shape ``(..., m)``)."""
        x = np.asarray(x, dtype=float)
        m = x.shape[-1]
        batch = x.shape[:-1]
        eye = np.eye(m)
        return [cls(x[..., i], np.broadcast_to(eye[i], batch + (m,))) for i in range(m)]

    def _chain(self, f0, f1, f2):
        g = f1[..., None] * self.g
        H = f2[..., None, None] * (self.g[..., :, None] * self.g[..., None, :])
        if self.H is not None:
            H = H + f1[..., None, None] * self.H
        return Jet(f0, g, H)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v + other.v, self.g + other.g, _hadd(self.H, other.H))
        return Jet(self.v + other, self.g, self.H)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.g, None if self.H is None else -self.H)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            H = a.g[..., :, None] * b.g[..., None, :]
            H = H + np.swapaxes(H, -1, -2)
            if b.H is not None:
                H = H + a.v[..., None, None] * b.H
            if a.H is not None:
                H = H + b.v[..., None, None] * a.H
            return Jet(a.v * b.v, a.v[..., None] * b.g + b.v[..., None] * a.g, H)
        c = np.asarray(other, dtype=float)
        H = None if self.H is None else self.H * c[..., None, None]
        return Jet(self.v * c, self.g * c[..., None], H)

    __rmul__ = __mul__

    def __pow__(self, k):
        k = int(k)
        v = np.asarray(self.v, dtype=float)
        if k == 0:
            return Jet(np.ones_like(v), np.zeros_like(self.g))
        if k == 1:
            return self
        if k == 2:
            f2 = np.full_like(v, 2.0)
        else:
            f2 = k * (k - 1) * v ** (k - 2)
        return self._chain(v**k, k * v ** (k - 1), f2)

    def exp(self):
        e = np.exp(self.v)
        return self._chain(e, e, e)


def _exp(a):
    if isinstance(a, Jet):
        return a.exp()
    return np.exp(a)


# ---------------------------------------------------------------------------
# expression tree
# ---------------------------------------------------------------------------


class Expr:
    def evaluate(self, env):
        raise NotImplementedError

    def substitute(self, mapping: Mapping[int, "Expr"]) -> "Expr":
        raise NotImplementedError

    def max_var(self) -> int:
        return -1


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def substitute(self, mapping):
        return self

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 0-based

    def evaluate(self, env):
        return env[self.index]

    def substitute(self, mapping):
        return mapping.get(self.index, self)

    def max_var(self):
        return self.index

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple

    def evaluate(self, env):
        acc = self.terms[0].evaluate(env)
        for t in self.terms[1:]:
            acc = acc + t.evaluate(env)
        return acc

    def substitute(self, mapping):
        return add(*(t.substitute(mapping) for t in self.terms))

    def max_var(self):
        return max(t.max_var() for t in self.terms)

    def __str__(self):
        return "(" + " + ".join(str(t) for t in self.terms) + ")"


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if isinstance(b, Jet) and not isinstance(a, Jet):
            a, b = b, a
        return a * b

    def substitute(self, mapping):
        return mul(self.left.substitute(mapping), self.right.substitute(mapping))

    def max_var(self):
        return max(self.left.max_var(), self.right.max_var())

    def __str__(self):
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def evaluate(self, env):
        b = self.base.evaluate(env)
        if isinstance(b, Jet):
            return b**self.exponent
        return b**self.exponent

    def substitute(self, mapping):
        return Pow(self.base.substitute(mapping), self.exponent)

    def max_var(self):
        return self.base.max_var()

    def __str__(self):
        return f"({self.base} ** {self.exponent})"


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr

    def evaluate(self, env):
        return _exp(self.arg.evaluate(env))

    def substitute(self, mapping):
        return Exp(self.arg.substitute(mapping))

    def max_var(self):
        return self.arg.max_var()

    def __str__(self):
        return f"exp({self.arg})"


def add(*terms):
    flat = []
    const = 0.0
    for t in terms:
        if isinstance(t, Add):
            flat.extend(t.terms)
        elif isinstance(t, Const):
            const += t.value
        else:
            flat.append(t)
    if const != 0.0 or not flat:
        flat.append(Const(const))
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Const):
            if x.value == 0.0:
                return Const(0.0)
            if x.value == 1.0:
                return y
    return Mul(a, b)


def neg(a):
    return mul(Const(-1.0), a)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _z_index(node, n):
    if not isinstance(node, ast.Name) or not node.id.startswith("z"):
        raise SpecError("re/im/abs2 take a single complex coordinate zk", "expression")
    try:
        k = int(node.id[1:])
    except ValueError:
        raise SpecError(f"bad complex coordinate {node.id!r}", "expression") from None
    if not 1 <= k <= n:
        raise SpecError(f"{node.id} out of range for n={n}", "expression")
    return k - 1


def _build(node, n, params):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        name = node.id
        if name in params:
            return Const(float(params[name]))
        if name == "pi":
            return Const(math.pi)
        if name.startswith("x") and name[1:].isdigit():
            i = int(name[1:])
            if not 1 <= i <= 2 * n:
                raise SpecError(f"{name} out of range for n={n}", "expression")
            return Var(i - 1)
        raise SpecError(f"unknown name {name!r}", "expression")
    if isinstance(node, ast.UnaryOp):
        inner = _build(node.operand, n, params)
        if isinstance(node.op, ast.USub):
            return neg(inner)
        if isinstance(node.op, ast.UAdd):
            return inner
    if isinstance(node, ast.BinOp):
        left = _build(node.left, n, params)
        right = _build(node.right, n, params)
        if isinstance(node.op, ast.Add):
            return add(left, right)
        if isinstance(node.op, ast.Sub):
            return add(left, neg(right))
        if isinstance(node.op, ast.Mult):
            return mul(left, right)
        if isinstance(node.op, ast.Div):
            if not isinstance(right, Const) or right.value == 0.0:
                raise SpecError("division only by nonzero constants", "expression")
            return mul(left, Const(1.0 / right.value))
        if isinstance(node.op, ast.Pow):
            if not isinstance(right, Const) or right.value != int(right.value) or right.value < 0:
                raise SpecError("exponents must be nonnegative integers", "expression")
            k = int(right.value)
            if isinstance(left, Const):
                return Const(left.value**k)
            return Pow(left, k)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        fname = node.func.id
        if len(node.args) != 1:
            raise SpecError(f"{fname}() takes one argument", "expression")
        arg = node.args[0]
        if fname == "exp":
            return Exp(_build(arg, n, params))
        if fname in ("re", "im", "abs2"):
            k = _z_index(arg, n)
            re_, im_ = Var(2 * k), Var(2 * k + 1)
            if fname == "re":
                return re_
            if fname == "im":
                return im_
            return add(Pow(re_, 2), Pow(im_, 2))
        raise SpecError(f"unknown function {fname!r}", "expression")
    raise SpecError(f"unsupported syntax: {ast.dump(node)[:60]}", "expression")


def parse_expression(source: str, n: int, params: Mapping[str, float] | None = None) -> Expr:
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"syntax error at column {exc.offset}: {exc.msg}", "expression") from None
    return _build(tree.body, n, dict(params or {}))


def affine_substitution(expr: Expr, matrix: np.ndarray, shift: Sequence[float]) -> Expr:
    """Compose ``expr`` with ``x -> matrix @ y + shift`` (new variables ``y``)."""
    matrix = np.asarray(matrix, dtype=float)
    mapping = {}
    for i in range(matrix.shape[0]):
        terms = [mul(Const(float(c)), Var(j)) for j, c in enumerate(matrix[i]) if c != 0.0]
        terms.append(Const(float(shift[i])))
        mapping[i] = add(*terms)
    return expr.substitute(mapping)
