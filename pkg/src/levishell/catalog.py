"""Built-in domains.

Each entry is a defining function in the expression language plus a bounding
box and a curvature length scale.  Graph-type entries (half space, slab,
model, non-pseudoconvex graph) are local patches around the origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import SpecError
from .expr import parse_expression
from .geometry import DefiningFunction, DomainSpec


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    defaults: dict
    build: Callable


def _sum(terms):
    return " + ".join(terms)


def _ball(n=2):
    n = int(n)
    expr = _sum(f"abs2(z{k})" for k in range(1, n + 1)) + " - 1"
    return expr, n, (-1.5, 1.5), 1.0


def _complex_ellipsoid(a=(2.0, 1.0)):
    a = tuple(float(v) for v in a)
    n = len(a)
    expr = _sum(f"{a[k - 1]!r} * abs2(z{k})" for k in range(1, n + 1)) + " - 1"
    semi = [v**-0.5 for v in a]
    return expr, n, (-1.5 * max(semi), 1.5 * max(semi)), min(semi) ** 2 / max(semi)


def _real_ellipsoid(a=(1.0, 2.0), b=(1.5, 1.0)):
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    if len(a) != len(b):
        raise SpecError("a and b need equal length", "params")
    n = len(a)
    terms = []
    for k in range(1, n + 1):
        terms.append(f"{a[k - 1]!r} * re(z{k})**2")
        terms.append(f"{b[k - 1]!r} * im(z{k})**2")
    semi = [v**-0.5 for v in a + b]
    return _sum(terms) + " - 1", n, (-1.5 * max(semi), 1.5 * max(semi)), min(semi) ** 2 / max(semi)


def _half_space(n=2):
    n = int(n)
    return f"re(z{n})", n, (-1.0, 1.0), 1.0


def _parabolic_slab():
    return "re(z2) - im(z2)**2", 2, (-1.0, 1.0), 0.5


def _model(beta=2.0):
    beta = float(beta)
    if not beta > 0:
        raise SpecError("beta must be positive", "params")
    scale = min(0.5, 1.0 / (2.0 * beta))
    return f"re(z2) + abs2(z1) - {beta!r} * im(z2)**2", 2, (-2 * scale, 2 * scale), scale


def _non_pseudoconvex():
    return "re(z2) - abs2(z1)", 2, (-1.0, 1.0), 0.5


def _ball_image(c=1.0):
    # pullback of the unit ball under the automorphism (z1, z2) -> (z1, z2 + c z1^2)
    c = float(c)
    expr = (
        f"abs2(z1) + (re(z2) + {c!r} * (re(z1)**2 - im(z1)**2))**2"
        f" + (im(z2) + {2 * c!r} * re(z1) * im(z1))**2 - 1"
    )
    return expr, 2, (-1.5 - c, 1.5 + c), 0.25


CATALOG = {
    "ball": CatalogEntry("ball", "unit ball sum |z_j|^2 - 1", {"n": 2}, _ball),
    "complex_ellipsoid": CatalogEntry(
        "complex_ellipsoid", "sum a_j |z_j|^2 - 1", {"a": [2.0, 1.0]}, _complex_ellipsoid
    ),
    "real_ellipsoid": CatalogEntry(
        "real_ellipsoid",
        "sum (a_j x_{2j-1}^2 + b_j x_{2j}^2) - 1",
        {"a": [1.0, 2.0], "b": [1.5, 1.0]},
        _real_ellipsoid,
    ),
    "half_space": CatalogEntry("half_space", "Re z_n (graph with h = 0)", {"n": 2}, _half_space),
    "parabolic_slab": CatalogEntry("parabolic_slab", "Re z2 - (Im z2)^2", {}, _parabolic_slab),
    "model": CatalogEntry("model", "Re z2 + |z1|^2 - beta (Im z2)^2", {"beta": 2.0}, _model),
    "non_pseudoconvex": CatalogEntry(
        "non_pseudoconvex", "Re z2 - |z1|^2", {}, _non_pseudoconvex
    ),
    "ball_image": CatalogEntry(
        "ball_image",
        "|z1|^2 + |z2 + c z1^2|^2 - 1, biholomorphic image of the ball",
        {"c": 1.0},
        _ball_image,
    ),
}


def catalog_names():
    return sorted(CATALOG)


def _canonical_params(params):
    items = []
    for k, v in sorted(params.items()):
        items.append((k, tuple(v) if isinstance(v, (list, tuple)) else v))
    return tuple(items)


def make_catalog_spec(name: str, params: dict | None = None, shell_width: float | None = None,
                      bbox=None) -> DomainSpec:
    if name not in CATALOG:
        raise SpecError(f"unknown catalog domain {name!r}; known: {', '.join(catalog_names())}",
                        "catalog")
    entry = CATALOG[name]
    merged = dict(entry.defaults)
    for k, v in (params or {}).items():
        if k not in merged:
            raise SpecError(f"unknown parameter {k!r} for {name}", "params")
        merged[k] = v
    try:
        expr_src, n, default_bbox, scale = entry.build(**merged)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc), "params") from None
    f = DefiningFunction(name, n, parse_expression(expr_src, n), bbox if bbox is not None else default_bbox)
    return DomainSpec(f, name, _canonical_params(merged), shell_width or 0.0, scale)


def parse_domain_arg(arg: str) -> tuple[str, dict]:
    """``"model:beta=8"`` -> ``("model", {"beta": 8.0})``; lists as ``a=2/1``."""
    name, _, rest = arg.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise SpecError(f"bad parameter {item!r}, expected key=value", "params")
            parts = val.split("/")
            try:
                nums = [float(p) for p in parts]
            except ValueError:
                raise SpecError(f"non-numeric parameter {item!r}", "params") from None
            params[key.strip()] = nums if len(nums) > 1 else nums[0]
    return name, params
