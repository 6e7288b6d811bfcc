"""Command-line interface: ``folddecay <classify|decay|lattice|region> [flags]``.

Exit codes: 0 success, 2 Degenerate point found with --expect-class-c,
3 invalid input (unknown surface, non-rational exponent, bad config),
4 fit failure, 5 quadrature budget exceeded, 6 exceptional lattice level.
"""
from __future__ import annotations

import argparse
import dataclasses
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import dispersive, lattice, measure, oscillatory, regions
from .catalog import default_amplitude, get_surface, tomllib
from .errors import (DomainError, ExceptionalLevelError, FitError, QuadratureBudgetError,
                     UnknownSurfaceError)
from .fields import ZeroField
from .surface import classify_point, trace_zero_curvature

SCHEMA_VERSION = "1.0"

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_INPUT = 3
EXIT_FIT = 4
EXIT_BUDGET = 5
EXIT_EXCEPTIONAL = 6


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# output helpers

def _clean(obj):
    """Recursively convert numpy and Fraction values to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dumps(report):
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def _emit_json(report, path):
    text = dumps(report)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


class _CSV:
    """CSV writer that flushes each row so partial output survives failures."""

    def __init__(self, path, header):
        self.path = path
        self.fh = open(path, "w", newline="") if path else None
        self.w = csv.writer(self.fh, lineterminator="\n") if self.fh else None
        self.rows = 0
        if self.w:
            self.w.writerow(header)
            self.fh.flush()

    def write(self, row):
        self.rows += 1
        if self.w:
            self.w.writerow([repr(float(c)) if isinstance(c, (float, np.floating)) else c for c in row])
            self.fh.flush()

    def close(self):
        if self.fh:
            self.fh.close()


def _pmap(fn, items, threads):
    # order-preserving map, so output is identical for any worker count
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _base(command):
    return {"schema_version": SCHEMA_VERSION, "command": command}


# classify

def cmd_classify(args):
    patch = get_surface(args.surface, args.catalog)
    pts = [tuple(p) for p in args.point] if args.point else None
    traces = []
    if not args.no_gamma:
        traces = trace_zero_curvature(patch)
    if pts is None:
        pts = [(0.0, 0.0)]
        for tr in traces:
            idx = np.unique(np.linspace(0, len(tr.points) - 1, args.gamma_points).round().astype(int))
            pts.extend(tuple(map(float, tr.points[i])) for i in idx)
    reports = [classify_point(patch, p) for p in pts]
    out = _base("classify")
    out.update({
        "surface": args.surface,
        "reports": [r.to_dict() for r in reports],
        "gamma_traces": [{"closure": t.closure, "n_points": len(t.points),
                          "points": t.points[::max(1, len(t.points) // 50)].tolist()} for t in traces],
        "in_class_C": all(r.in_class_C for r in reports),
    })
    _emit_json(out, args.json)
    if args.expect_class_c and any(r.kind == "Degenerate" for r in reports):
        return EXIT_DEGENERATE
    return EXIT_OK


# decay

def _grid(args, lo, hi, n):
    return np.geomspace(args.min if args.min else lo, args.max if args.max else hi, args.n or n)


def _fit_report(samples, args, out):
    try:
        fit = oscillatory.fit_decay(samples, min_samples=args.min_samples)
    except FitError as exc:
        out["fit"] = None
        out["error"] = str(exc)
        return None, out
    exponent = args.exponent if args.exponent is not None else -fit.slope
    out["fit"] = fit.to_dict()
    out["slope"] = fit.slope
    out["residual"] = fit.max_residual
    out["envelope_exponent"] = exponent
    out["envelope_ratio"] = oscillatory.envelope_ratio(samples, exponent)
    return fit, out


def _decay_oscillatory(args, writer, mags, scales):
    patch = get_surface(args.surface, args.catalog)
    amp = ZeroField() if args.amplitude == "zero" else default_amplitude(patch)
    grid = _grid(args, 1e2, 1e4, 12)
    drifts = oscillatory.drift_set(patch.domain_radius) if args.worst_drift else [np.zeros(2)]
    def one(lam, d):
        spec = oscillatory.OscillatorySpec(patch.h, amp, np.array([lam]), tuple(d), patch.domain_radius)
        return 0.0 if spec.is_zero else abs(oscillatory._integrate(spec, lam, args.method))

    for lam in grid:
        ms = _pmap(lambda d: one(lam, d), drifts, args.threads)
        i = int(np.argmax(ms))
        best, arg = ms[i], drifts[i]
        writer.write((lam, arg[0], arg[1], best))
        scales.append(lam)
        mags.append(best)


def _decay_measure(args, writer, mags, scales):
    patch = get_surface(args.surface, args.catalog)
    dens = ZeroField() if args.amplitude == "zero" else default_amplitude(patch)
    spec = measure.SurfaceMeasureSpec(patch, dens)
    dirs = measure.direction_set(spec, args.n_directions)
    for R in _grid(args, 1e2, 1e5, 10):
        ms = _pmap(lambda d: 0.0 if spec.is_zero else abs(measure.surface_measure_ft(spec, R * d, args.method)),
                   dirs, args.threads)
        for d, m in zip(dirs, ms):
            writer.write((d[0], d[1], d[2], R, m))
        best = max(ms)
        scales.append(R)
        mags.append(best)


def _decay_dispersive(args, writer, mags, scales):
    try:
        sym = dispersive.get_symbol(args.surface)
    except DomainError as exc:
        raise UnknownSurfaceError(str(exc)) from exc
    for t in _grid(args, 1e2, 1e4, 8):
        m = 0.0 if args.amplitude == "zero" else dispersive.sup_kernel(sym, t)[0]
        writer.write((t, m))
        scales.append(t)
        mags.append(m)


_DECAY = {
    "oscillatory": (_decay_oscillatory, ("lambda", "drift_u", "drift_v", "magnitude")),
    "measure": (_decay_measure, ("direction_x", "direction_y", "direction_z", "R", "magnitude")),
    "dispersive": (_decay_dispersive, ("t", "sup_magnitude")),
}


def cmd_decay(args):
    run, header = _DECAY[args.mode]
    writer = _CSV(args.csv, header)
    mags, scales = [], []
    out = _base("decay")
    out.update({"surface": args.surface, "mode": args.mode, "method": args.method})
    code = EXIT_OK
    try:
        run(args, writer, mags, scales)
    except QuadratureBudgetError as exc:
        out["error"] = str(exc)
        code = EXIT_BUDGET
    finally:
        writer.close()
    out["scales"] = scales
    out["sup_magnitude"] = mags
    if code == EXIT_OK:
        samples = oscillatory.DecaySamples(np.array(scales), np.array(mags), args.method)
        fit, out = _fit_report(samples, args, out)
        if fit is None or fit.max_residual > args.max_residual:
            code = EXIT_FIT
    out["exit_code"] = code
    _emit_json(out, args.json)
    return code


# lattice

def _lattice_mesh(args, out):
    mesh = lattice.level_set_mesh(args.a, args.resolution)
    if args.obj:
        mesh.to_obj(args.obj)
    out.update({"level": args.a, "resolution": mesh.resolution, "n_vertices": mesh.n_vertices,
                "n_faces": int(len(mesh.faces)), "obj": args.obj})


def _lattice_classify(args, out):
    out.update(lattice.classify_level_set(args.a, args.resolution).to_dict())


def _kernel_sites(args):
    if args.x:
        return np.array(args.x, float)
    r = np.arange(-args.L, args.L + 1)
    return np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3).astype(float)


def _lattice_spectral(args, out):
    X = _kernel_sites(args)
    res = args.resolution or 512
    vals = lattice.spectral_kernel_field(args.a, X, res, verify=not args.no_verify,
                                         allow_umbilic=args.allow_umbilic)
    writer = _CSV(args.csv, ("x1", "x2", "x3", "re", "im"))
    for x, v in zip(X, vals):
        writer.write((int(x[0]), int(x[1]), int(x[2]), float(np.real(v)), 0.0))
    writer.close()
    out.update({"level": args.a, "resolution": res, "n_sites": int(len(X)),
                "values": [[int(c) for c in x] + [float(np.real(v))] for x, v in zip(X[:64], vals[:64])]})


def _lattice_resolvent(args, out):
    if args.delta is not None:
        field = lattice.resolvent_kernel(args.lam, args.delta, args.L, args.N)
        info = {"delta": args.delta}
    else:
        deltas = args.deltas or lattice.default_deltas(args.N)
        ext = lattice.extrapolate_delta(args.lam, deltas, args.L, args.N)
        field = ext.field
        info = {"deltas": list(map(float, deltas)), "residual": ext.residual}
    writer = _CSV(args.csv, ("x1", "x2", "x3", "re", "im"))
    for row in field.rows():
        writer.write(row)
    writer.close()
    out.update({"lam": args.lam, "L": args.L, "N": args.N, "origin": [float(field[(0, 0, 0)].real),
                                                                      float(field[(0, 0, 0)].imag)]})
    out.update(info)


def _lattice_holder(args, out):
    res = lattice.holder_scan(args.lam, tuple(args.separations), args.delta_param, args.L, args.N)
    out.update({"lam": args.lam, "results": [dataclasses.asdict(r) for r in res]})


_LATTICE = {"mesh": _lattice_mesh, "classify": _lattice_classify, "spectral": _lattice_spectral,
            "resolvent": _lattice_resolvent, "holder": _lattice_holder}


def cmd_lattice(args):
    out = _base("lattice")
    out["action"] = args.action
    if args.action in ("mesh", "classify", "spectral") and args.a is None:
        raise CLIError("--a is required", EXIT_INPUT)
    if args.action in ("resolvent", "holder") and args.lam is None:
        raise CLIError("--lam is required", EXIT_INPUT)
    if args.action in ("mesh", "classify") and args.resolution is None:
        args.resolution = 192 if args.action == "classify" else 128
    _LATTICE[args.action](args, out)
    _emit_json(out, args.json)
    return EXIT_OK


# region

def _parse_pair(p, q):
    return regions.ExponentPoint(regions.as_rational(p), regions.as_rational(q))


def cmd_region(args):
    pairs = []
    if args.batch:
        data = json.loads(Path(args.batch).read_text())
        items = data["points"] if isinstance(data, dict) else data
        pairs = [tuple(it) for it in items]
    vals = list(args.values)
    if len(vals) % 2:
        raise CLIError("region needs an even number of values (1/p 1/q pairs)", EXIT_INPUT)
    pairs += [(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
    if not pairs:
        raise CLIError("no points given", EXIT_INPUT)
    verdicts = []
    for p, q in pairs:
        if isinstance(p, float) or isinstance(q, float):
            raise DomainError(f"not an exact rational: {p!r}, {q!r}")
        pt = _parse_pair(p, q)
        v = regions.pentagon_membership(pt)
        verdicts.append({"inv_p": str(pt.inv_p), "inv_q": str(pt.inv_q), **v.to_dict()})
    out = _base("region")
    out["verdicts"] = verdicts
    _emit_json(out, args.json)
    return EXIT_OK


# parser and configuration

def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(x):
    v = int(x)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    top = argparse.ArgumentParser(prog="folddecay", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file with flag defaults")
    common.add_argument("--catalog", help="surface catalog file (overrides FOLDDECAY_CATALOG)")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker count")
    common.add_argument("--json", help="write the JSON report here instead of stdout")
    sub = top.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="classify points of a catalog surface")
    c.add_argument("surface")
    c.add_argument("--point", nargs=2, type=float, action="append", metavar=("U", "V"))
    c.add_argument("--gamma-points", type=int, default=8)
    c.add_argument("--no-gamma", action="store_true")
    c.add_argument("--expect-class-c", action="store_true")

    d = sub.add_parser("decay", parents=[common], help="decay scan with a power-law fit")
    d.add_argument("surface", help="catalog surface, or symbol name for --mode dispersive")
    d.add_argument("--mode", choices=sorted(_DECAY), default="oscillatory")
    d.add_argument("--method", choices=("nested", "oracle"), default="nested")
    d.add_argument("--min", type=_positive)
    d.add_argument("--max", type=_positive)
    d.add_argument("--n", type=int)
    d.add_argument("--worst-drift", action="store_true")
    d.add_argument("--n-directions", type=int, default=32)
    d.add_argument("--amplitude", choices=("default", "zero"), default="default")
    d.add_argument("--exponent", type=float)
    d.add_argument("--min-samples", type=int, default=8)
    d.add_argument("--max-residual", type=_positive, default=0.25)
    d.add_argument("--csv")

    lt = sub.add_parser("lattice", parents=[common], help="cubic-lattice level sets and kernels")
    lt.add_argument("action", choices=sorted(_LATTICE))
    lt.add_argument("--a", type=float)
    lt.add_argument("--lam", type=float)
    lt.add_argument("--resolution", type=int)
    lt.add_argument("--x", nargs=3, type=int, action="append", metavar=("X1", "X2", "X3"))
    lt.add_argument("--L", type=int, default=8)
    lt.add_argument("--N", type=int, default=1024)
    lt.add_argument("--delta", type=_positive)
    lt.add_argument("--deltas", nargs="+", type=_positive)
    lt.add_argument("--delta-param", type=Fraction, default=Fraction(1))
    lt.add_argument("--separations", nargs="+", type=_positive, default=[0.1, 0.05, 0.025])
    lt.add_argument("--allow-umbilic", action="store_true")
    lt.add_argument("--no-verify", action="store_true")
    lt.add_argument("--obj")
    lt.add_argument("--csv")

    r = sub.add_parser("region", parents=[common], help="label (1/p, 1/q) points")
    r.add_argument("values", nargs="*", help="1/p 1/q pairs such as 7/10 9/70")
    r.add_argument("--batch", help="JSON file: list of [1/p, 1/q] string pairs")
    return top, {"classify": c, "decay": d, "lattice": lt, "region": r}


def load_config(path):
    p = Path(path)
    raw = p.read_bytes()
    data = tomllib.loads(raw.decode()) if p.suffix.lower() == ".toml" else json.loads(raw)
    if not isinstance(data, dict):
        raise CLIError("config must be a table", EXIT_INPUT)
    return {k.replace("-", "_"): v for k, v in data.items()}


def _apply_config(sp, config):
    known = {a.dest for a in sp._actions} - {"help", "config"}
    unknown = sorted(set(config) - known)
    if unknown:
        raise CLIError(f"unknown config keys {unknown}", EXIT_INPUT)
    for k, v in config.items():
        if ("tol" in k or k in ("max_residual", "delta")) and not (isinstance(v, (int, float)) and v > 0):
            raise CLIError(f"config value {k} must be positive", EXIT_INPUT)
    sp.set_defaults(**config)


COMMANDS = {"classify": cmd_classify, "decay": cmd_decay, "lattice": cmd_lattice, "region": cmd_region}


def _parse(parser, argv):
    # argparse exits with 2 on usage errors; 2 is reserved for Degenerate points
    try:
        return parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            raise
        raise CLIError("invalid arguments", EXIT_INPUT) from None


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = _parse(parser, argv)
        if args.config:
            _apply_config(subs[args.command], load_config(args.config))
            args = _parse(parser, argv)
        return COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"folddecay: {exc}", file=sys.stderr)
        return exc.code
    except UnknownSurfaceError as exc:
        print(f"folddecay: {exc.args[0]}", file=sys.stderr)
        return EXIT_INPUT
    except ExceptionalLevelError as exc:
        print(f"folddecay: {exc}", file=sys.stderr)
        return EXIT_EXCEPTIONAL
    except QuadratureBudgetError as exc:
        print(f"folddecay: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except FitError as exc:
        print(f"folddecay: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (DomainError, OSError, ValueError) as exc:
        print(f"folddecay: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
