"""JSON domain files.

Schema (version 1)::

    {
      "schema_version": 1,
      "name": "my_domain",             # optional, defaults to the file stem
      "n": 2,                          # required with "expression"
      "expression": "abs2(z1) + ...",  # exactly one of expression / catalog
      "catalog": "ball",
      "params": {"beta": 2},           # named constants or catalog parameters
      "bbox": [-1.5, 1.5],             # [lo, hi] or one [lo, hi] per real coordinate
      "shell_width": 0.1,              # optional, length units
      "scale": 1.0                     # optional curvature length scale
    }
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .catalog import CATALOG, make_catalog_spec
from .errors import SpecError
from .expr import parse_expression
from .geometry import DefiningFunction, DomainSpec

SCHEMA_VERSION = 1
FIELDS = ("schema_version", "name", "n", "expression", "catalog", "params", "bbox",
          "shell_width", "scale")


def _number(value, field, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SpecError("must be a finite number", field)
    if positive and not value > 0:
        raise SpecError("must be positive", field)
    return float(value)


def _bbox(value, n):
    if value is None:
        raise SpecError("required with 'expression'", "bbox")
    if not isinstance(value, list) or not value:
        raise SpecError("must be [lo, hi] or a list of [lo, hi] pairs", "bbox")
    if all(isinstance(v, list) for v in value):
        if len(value) != 2 * n:
            raise SpecError(f"needs {2 * n} intervals, got {len(value)}", "bbox")
        pairs = value
    else:
        pairs = [value]
    out = []
    for pair in pairs:
        if len(pair) != 2:
            raise SpecError("intervals must have two entries", "bbox")
        lo, hi = (_number(v, "bbox") for v in pair)
        if not lo < hi:
            raise SpecError("interval lower end must be below the upper end", "bbox")
        out.append((lo, hi))
    return tuple(out[0]) if len(out) == 1 else tuple(out)


def estimate_scale(spec: DomainSpec) -> float:
    """``1 / max curvature bound`` over the seed pool, capped by the box half-width."""
    f = spec.function
    cap = 0.5 * float(np.min(f.bounds[:, 1] - f.bounds[:, 0]))
    pool = spec.seed_pool
    if len(pool) == 0:
        return cap
    j = f.jet(pool)
    gn = np.linalg.norm(j.g, axis=1)
    nu = j.g / gn[:, None]
    P = np.eye(f.dim)[None] - nu[:, :, None] * nu[:, None, :]
    K = P @ j.H @ P / gn[:, None, None]
    kappa = float(np.max(np.linalg.norm(K, ord=2, axis=(1, 2))))
    return cap if kappa * cap <= 1.0 else 1.0 / kappa


def spec_from_dict(data: dict, default_name: str = "domain") -> DomainSpec:
    """Validated :class:`DomainSpec` from a decoded domain document."""
    if not isinstance(data, dict):
        raise SpecError("top level must be an object", "<root>")
    for key in data:
        if key not in FIELDS:
            raise SpecError("unknown field", key)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpecError(f"unsupported version {version!r}, expected {SCHEMA_VERSION}",
                        "schema_version")
    has_expr = "expression" in data
    has_cat = "catalog" in data
    if has_expr == has_cat:
        raise SpecError("exactly one of 'expression' and 'catalog' is required", "expression")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("must be an object", "params")
    shell = data.get("shell_width")
    shell = None if shell is None else _number(shell, "shell_width", positive=True)
    scale = data.get("scale")
    scale = None if scale is None else _number(scale, "scale", positive=True)
    name = data.get("name", default_name)
    if not isinstance(name, str) or not name:
        raise SpecError("must be a nonempty string", "name")

    if has_cat:
        cat = data["catalog"]
        if not isinstance(cat, str) or cat not in CATALOG:
            raise SpecError(f"unknown catalog domain {cat!r}", "catalog")
        bbox = data.get("bbox")
        n = CATALOG[cat].defaults.get("n")
        if bbox is not None:
            bbox = _bbox(bbox, int(params.get("n", n or 2)))
        spec = make_catalog_spec(cat, params, shell, bbox)
        if scale is not None:
            spec = DomainSpec(spec.function, spec.source, spec.params, shell or 0.0, scale)
        return spec.validate()

    n = data.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= 8:
        raise SpecError("must be an integer between 1 and 8", "n")
    src = data["expression"]
    if not isinstance(src, str):
        raise SpecError("must be a string", "expression")
    numeric = {}
    for k, v in params.items():
        numeric[k] = _number(v, f"params.{k}")
    expr = parse_expression(src, n, numeric)
    f = DefiningFunction(name, n, expr, _bbox(data.get("bbox"), n))
    spec = DomainSpec(f, src, tuple(sorted(numeric.items())), shell or 0.0, scale or 1.0)
    if scale is None:
        spec = DomainSpec(f, src, spec.params, shell or 0.0, estimate_scale(spec))
    return spec.validate()


def parse_domain_spec(path) -> DomainSpec:
    """Read and validate a JSON domain file; errors carry line/column or field names."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}", "<file>") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}",
                        "<json>") from None
    try:
        return spec_from_dict(data, default_name=path.stem)
    except SpecError as exc:
        err = SpecError(f"{path}: {exc}")
        err.field = exc.field
        raise err from None


def spec_to_dict(spec: DomainSpec) -> dict:
    """Domain document for ``spec``; catalog domains are written by name."""
    f = spec.function
    out = {"schema_version": SCHEMA_VERSION, "name": spec.name}
    if spec.source in CATALOG and spec.name == spec.source:
        out["catalog"] = spec.source
        out["params"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in spec.params}
    else:
        out["n"] = spec.n
        out["expression"] = str(f.expr)
    out["bbox"] = [[float(lo), float(hi)] for lo, hi in f.bounds]
    out["shell_width"] = spec.shell_width
    out["scale"] = spec.scale
    return out
