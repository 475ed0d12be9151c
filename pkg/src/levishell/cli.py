"""Command-line entry point ``levishell``.

Exit codes: 0 success or pass, 1 verification failure, 2 usage or input
error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, config
from .catalog import CATALOG, catalog_names, make_catalog_spec, parse_domain_arg
from .distance import sample_boundary_points, shell_sample
from .errors import ArgumentError, LeviShellError, NumericalError, SpecError
from .forms import classify_boundary, nearest_boundary_report
from .geometry import DomainSpec
from .specfile import parse_domain_spec
from .theorems import KINDS, df_exponent, df_verify, certify_shell_width, verify_theorem

OUTPUT_DIR_ENV = "LEVISHELL_OUTPUT_DIR"
SWEEP_CSV_VERSION = "levishell-sweep/1"
VERIFY_CSV_VERSION = "levishell-verify/1"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    domain: str | None
    shell: float | None
    samples: int
    seed: int
    tol: float
    gamma: float | None
    fmt: str
    output: str | None
    jobs: int
    meta: bool


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _positive(kind):
    def conv(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not value > 0 or (isinstance(value, float) and not math.isfinite(value)):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value

    return conv


def _nonneg_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levishell", description="Positivity of distance-function Hessians near a boundary.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, samples=config.DEFAULT_SAMPLES):
        sp.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
        sp.add_argument("--samples", type=_positive(int), default=samples)
        sp.add_argument("--jobs", type=_positive(int), default=1)
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--no-meta", dest="meta", action="store_false",
                        help="omit runtime and version fields")

    sub.add_parser("catalog", help="list built-in domains")

    sp = sub.add_parser("analyze", help="distance data at a point and its nearest boundary point")
    sp.add_argument("domain")
    sp.add_argument("--point", type=float, nargs="+", required=True)
    sp.add_argument("--gamma", type=_nonneg_float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output")
    sp.add_argument("--no-meta", dest="meta", action="store_false")

    sp = sub.add_parser("classify", help="boundary classification over sampled boundary points")
    sp.add_argument("domain")
    sp.add_argument("--gamma", type=_nonneg_float, default=1.0)
    common(sp, samples=50)

    sp = sub.add_parser("verify", help="sampled verification of a squared-distance inequality")
    sp.add_argument("kind", choices=KINDS)
    sp.add_argument("domain")
    sp.add_argument("--gamma", type=_nonneg_float)
    sp.add_argument("--side", choices=("inside", "outside"), default="inside")
    sp.add_argument("--shell", type=_positive(float))
    sp.add_argument("--tol", type=_positive(float), default=config.DEFAULT_TOL)
    sp.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    sp.add_argument("--certify", action="store_true",
                    help="halve the shell width until the check passes")
    common(sp)

    sp = sub.add_parser("df", help="exponent from the boundary aperture, checked on the shell")
    sp.add_argument("domain", nargs="?")
    sp.add_argument("--gamma", type=_nonneg_float, help="only print eta for this aperture")
    sp.add_argument("--shell", type=_positive(float))
    sp.add_argument("--tol", type=_positive(float), default=config.DEFAULT_TOL)
    sp.add_argument("--boundary-samples", type=_positive(int), default=16)
    sp.add_argument("--center", type=float, nargs="+")
    sp.add_argument("--radius", type=_positive(float))
    sp.add_argument("--eta", type=float, help="check this exponent instead of the derived one")
    sp.add_argument("--search-eta", action="store_true",
                    help="also report the largest exponent passing on the sampled shell")
    common(sp, samples=200)

    sp = sub.add_parser("sweep", help="CSV of per-boundary-point positivity data")
    sp.add_argument("domain")
    common(sp, samples=50)
    return p


def load_domain(arg: str) -> DomainSpec:
    """Catalog ``name[:k=v,...]`` or a path to a JSON domain file."""
    if arg.partition(":")[0] not in CATALOG and (
            arg.endswith(".json") or os.sep in arg or Path(arg).is_file()):
        return parse_domain_spec(arg)
    name, params = parse_domain_arg(arg)
    if name not in CATALOG:
        raise SpecError(f"unknown domain {name!r}; use 'levishell catalog' or a .json domain file",
                        "domain")
    return make_catalog_spec(name, params)


def run_config(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        domain=getattr(args, "domain", None),
        shell=getattr(args, "shell", None),
        samples=getattr(args, "samples", 0),
        seed=getattr(args, "seed", config.DEFAULT_SEED),
        tol=getattr(args, "tol", config.DEFAULT_TOL),
        gamma=getattr(args, "gamma", None),
        fmt=getattr(args, "fmt", "json"),
        output=getattr(args, "output", None),
        jobs=getattr(args, "jobs", 1),
        meta=getattr(args, "meta", True),
    )


def _meta(args, start):
    if not getattr(args, "meta", True):
        return {}
    return {"meta": {"version": __version__, "runtime": time.perf_counter() - start,
                     "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                     "config": asdict(run_config(args))}}


def _emit(text: str, args, default_name: str):
    out = getattr(args, "output", None)
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = str(Path(os.environ[OUTPUT_DIR_ENV]) / default_name)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _slug(spec):
    return spec.name.replace("@", "_")


def _cmd_catalog(args):
    lines = [f"{name:20s} {CATALOG[name].description}  defaults={CATALOG[name].defaults}"
             for name in catalog_names()]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_analyze(args, start):
    spec = load_domain(args.domain)
    z = np.array(args.point, float)
    if z.shape != (spec.function.dim,):
        raise ArgumentError(f"--point needs {spec.function.dim} real coordinates")
    out = {"domain": spec.name, "point": [float(v) for v in z]}
    if float(spec.function.value(z)) == 0.0:
        report = classify_boundary(spec, z, args.gamma)
        out.update(delta=0.0)
    else:
        s = shell_sample(spec, z, args.seed)
        Hd = s.delta_forms
        out.update(
            delta=s.delta,
            grad_delta=[float(v) for v in s.gradient],
            projection=[float(v) for v in s.projection.point],
            within_shell=s.projection.within_shell,
            hessian_delta=Hd.H.tolist(),
            levi_delta={"re": Hd.L.real.tolist(), "im": Hd.L.imag.tolist()},
            complement_delta={"re": Hd.Q.real.tolist(), "im": Hd.Q.imag.tolist()},
            normal_annihilation=s.annihilation,
        )
        report = nearest_boundary_report(spec, z, args.gamma)
    out["boundary_report"] = report.as_dict()
    out["defaults"] = config.defaults_dict()
    out.update(_meta(args, start))
    _emit(_json(out), args, f"analyze-{_slug(spec)}.json")
    return EXIT_OK


def _map(fun, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fun, items))
    return [fun(x) for x in items]


def _cmd_classify(args, start):
    spec = load_domain(args.domain)
    pts = sample_boundary_points(spec, args.samples, args.seed)
    reps = _map(lambda p: classify_boundary(spec, p, args.gamma), list(pts), args.jobs)
    flags = {k: all(r.flags[k] for r in reps) for k in reps[0].flags} if reps else {}
    out = {
        "domain": spec.name,
        "n_samples": len(reps),
        "seed": args.seed,
        "flags_all": flags,
        "min_max_gamma": min((r.max_gamma for r in reps), default=None),
        "samples": [r.as_dict() for r in reps],
        "defaults": config.defaults_dict(),
    }
    out.update(_meta(args, start))
    _emit(_json(out), args, f"classify-{_slug(spec)}.json")
    return EXIT_OK


def _verify_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(f"# {VERIFY_CSV_VERSION}\n")
    dim = len(report.argmin_point)
    w.writerow([f"x{i + 1}" for i in range(dim)] + ["delta", "min_slack"])
    for point, delta, slack in report.rows:
        w.writerow([repr(v) for v in point] + [repr(delta), repr(slack)])
    return buf.getvalue()


def _cmd_verify(args, start):
    spec = load_domain(args.domain)
    if args.kind == "gamma" and args.gamma is None:
        raise ArgumentError("verify gamma needs --gamma")
    kw = dict(n_samples=args.samples, seed=args.seed, tol=args.tol, side=args.side,
              gamma=args.gamma, jobs=args.jobs)
    certified = None
    if args.certify:
        certified, report = certify_shell_width(args.kind, spec, args.shell, **kw)
    else:
        report = verify_theorem(args.kind, spec, args.shell, **kw)
    if args.fmt == "csv":
        text = _verify_csv(report)
    else:
        d = report.to_dict(meta=False)
        if args.certify:
            d["certified_shell_width"] = certified
        d.update(_meta(args, start))
        text = _json(d)
    _emit(text, args, f"verify-{args.kind}-{_slug(spec)}.{args.fmt}")
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {args.kind} on {spec.name}: min slack {report.min_slack:.6g} "
          f"(tol {report.tol:g})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_df(args, start):
    if args.domain is None:
        if args.gamma is None:
            raise ArgumentError("df needs a domain or --gamma")
        print(f"eta = {df_exponent(args.gamma):.15g}")
        return EXIT_OK
    spec = load_domain(args.domain)
    if args.gamma is not None:
        print(f"eta = {df_exponent(args.gamma):.15g}")
        return EXIT_OK
    if (args.center is None) != (args.radius is None):
        raise ArgumentError("--center and --radius go together")
    res = df_verify(spec, args.shell, args.boundary_samples, args.samples, args.seed, args.tol,
                    args.center, args.radius, args.eta, args.jobs, args.search_eta)
    d = res.to_dict(meta=False)
    d.update(domain=spec.name, seed=args.seed, defaults=config.defaults_dict())
    d.update(_meta(args, start))
    _emit(_json(d), args, f"df-{_slug(spec)}.json")
    print(res.message, file=sys.stderr)
    return EXIT_OK if res.certified else EXIT_FAIL


def _cmd_sweep(args, start):
    spec = load_domain(args.domain)
    pts = sample_boundary_points(spec, args.samples, args.seed)
    reps = _map(lambda p: classify_boundary(spec, p, with_max_gamma=True), list(pts), args.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(f"# {SWEEP_CSV_VERSION}\n")
    dim = spec.function.dim
    w.writerow([f"x{i + 1}" for i in range(dim)]
               + ["min_eig_L_CT", "min_eig_H_RT", "max_gamma", "eta"])
    for r in reps:
        w.writerow([repr(float(v)) for v in r.point]
                   + [repr(r.min_eig_L_CT), repr(r.min_eig_H_RT), repr(r.max_gamma),
                      repr(df_exponent(r.max_gamma))])
    _emit(buf.getvalue(), args, f"sweep-{_slug(spec)}.csv")
    return EXIT_OK


COMMANDS = {
    "analyze": _cmd_analyze,
    "classify": _cmd_classify,
    "verify": _cmd_verify,
    "df": _cmd_df,
    "sweep": _cmd_sweep,
}


def run(argv=None) -> int:
    """Run one command; returns the exit code."""
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.command == "catalog":
            return _cmd_catalog(args)
        return COMMANDS[args.command](args, start)
    except SpecError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LeviShellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
