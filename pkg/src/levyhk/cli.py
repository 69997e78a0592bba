"""Command-line front end.

Every command prints a deterministic JSON report (``"schema": 1``) to standard
output or ``--out``; tables go to ``--csv`` (``.`` decimals) and
``--gnuplot`` (whitespace columns, ``#`` headers).  Exit codes: 0 pass,
1 verified failure, 2 invalid input, 3 numerical failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import serialize
from .errors import BadParameter, InvalidInput, LevyError, NumericalFailure

EXIT_PASS, EXIT_FAIL, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3
CONFIG_KEYS = {"zoo", "triplet", "params", "tolerances", "seed", "out"}
TOLERANCE_KEYS = {"band", "floor", "rtol", "alias_tol"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise BadParameter(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------
def _write_table(path, header, rows, comment=False):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write("# " + " ".join(header) + "\n")
        else:
            fh.write(",".join(header) + "\n")
        sep = " " if comment else ","
        for row in rows:
            if row is None:
                fh.write("\n")
                continue
            fh.write(sep.join(f"{float(v):.17g}" for v in row) + "\n")


def _tables(args, header, rows, blocks=None):
    if getattr(args, "csv", None):
        _write_table(args.csv, header, rows)
    if getattr(args, "gnuplot", None):
        _write_table(args.gnuplot, header, blocks if blocks is not None else rows, comment=True)


# ---------------------------------------------------------------------------
# triplets
# ---------------------------------------------------------------------------
def _triplet(args, key="zoo", file_key="triplet"):
    given, path = getattr(args, key, None), getattr(args, file_key, None)
    if given and path:
        raise BadParameter(f"give either --{key} or --{file_key.replace('_', '-')}, not both")
    if isinstance(given, dict):
        return serialize.triplet_from_dict(given)
    if given:
        from .zoo import parse_zoo

        return parse_zoo(given)
    if path:
        return serialize.load_triplet(path)
    raise BadParameter(f"a triplet is required (--{key} NAME:PARAMS or --{file_key.replace('_', '-')} FILE)")


def _label(t):
    return t.name or "custom"


def _points(values, d):
    X = np.asarray(values, float)
    if X.size % d:
        raise BadParameter(f"point coordinates must come in groups of d = {d}")
    return X.reshape(-1, d)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_triplet_validate(args):
    from .measure import validate_triplet

    t = _triplet(args)
    return EXIT_PASS, {"triplet": serialize.triplet_to_dict(t), "validation": validate_triplet(t).to_dict()}


def cmd_h_eval(args):
    from .concentration import ConcentrationFn

    c = ConcentrationFn(_triplet(args))
    r = np.asarray(args.r, float)
    h, K = c.h(r), c.K(r)
    _tables(args, ["r", "h", "K"], np.column_stack([r, h, K]))
    return EXIT_PASS, {"r": r, "h": h, "K": K}


def cmd_h_invert(args):
    from .concentration import ConcentrationFn

    c = ConcentrationFn(_triplet(args))
    u = np.asarray(args.u, float)
    r = c.inverse(u)
    _tables(args, ["u", "h_inverse"], np.column_stack([u, r]))
    return EXIT_PASS, {"u": u, "h_inverse": r}


def cmd_exponent_eval(args):
    from .exponent import CharExponent

    t = _triplet(args)
    X = _points(args.x, t.dim)
    psi = CharExponent(t).psi(X)
    rows = np.column_stack([X, psi.real, psi.imag])
    _tables(args, [f"x{k + 1}" for k in range(t.dim)] + ["re_psi", "im_psi"], rows)
    return EXIT_PASS, {"x": X, "re_psi": psi.real, "im_psi": psi.imag}


def cmd_conditions_audit(args):
    from .conditions import audit

    t = _triplet(args)
    include = args.include.split(",") if args.include else None
    rep = audit(t, T=args.T, workers=args.workers, include=include)
    return rep.exit_code, {"triplet": _label(t), "audit": rep.to_dict()}


def cmd_density_fft(args):
    from .density import density_grid

    t = _triplet(args)
    kw = {"alias_tol": args.alias_tol}
    if args.n:
        kw["n"] = args.n
    g = density_grid(t, args.t, **kw)
    if args.csv or args.gnuplot:
        rows = g.to_rows()
        blocks = rows
        if g.dim == 2:
            m = g.shape[1]
            blocks = [row for i in range(g.shape[0]) for row in list(rows[i * m:(i + 1) * m]) + [None]]
        _tables(args, [f"x{k + 1}" for k in range(g.dim)] + ["p"], rows, blocks)
    code = EXIT_PASS if g.pass_grade else EXIT_NUMERICAL
    return code, {"triplet": _label(t), "grid": g.summary()}


def cmd_density_point(args):
    from .density import density_point

    t = _triplet(args)
    X = _points(args.x, t.dim)
    vals = [density_point(t, args.t, x, rtol=args.rtol) for x in X]
    _tables(args, [f"x{k + 1}" for k in range(t.dim)] + ["p"], np.column_stack([X, vals]))
    return EXIT_PASS, {"triplet": _label(t), "t": args.t, "x": X, "p": vals}


def _cert_output(args, t, cert):
    if args.gnuplot:
        with open(args.gnuplot, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(cert.gnuplot())
    if args.csv:
        _write_table(args.csv, ["t", "ratio"], zip(cert.t_grid, cert.ratios))
    return (EXIT_PASS if cert.verdict == "pass" else EXIT_FAIL), {"triplet": _label(t),
                                                                  "certificate": cert.to_dict()}


def cmd_bounds_upper(args):
    from .density import dyadic_times, verify_upper_envelope

    t = _triplet(args)
    cert = verify_upper_envelope(t, dyadic_times(args.tmin, args.tmax), band=args.band)
    return _cert_output(args, t, cert)


def cmd_bounds_lower(args):
    from .density import dyadic_times, verify_lower_envelope

    t = _triplet(args)
    minorant = _triplet(args, "minorant", "minorant_file") if (args.minorant or args.minorant_file) else None
    cert = verify_lower_envelope(t, dyadic_times(args.tmin, args.tmax), theta=args.theta,
                                 variant=args.variant, minorant=minorant, a1=args.a1, a2=args.a2,
                                 force=args.force, floor=args.floor)
    return _cert_output(args, t, cert)


def cmd_decompose_diag(args):
    from .decompose_diag import diagnostics

    t = _triplet(args)
    nu = _triplet(args, "minorant", "minorant_file")
    rep = diagnostics(t, nu, args.a1, a0=args.a0, r=args.r, T=args.T, r1=args.r1)
    ok = rep["ball_mass"]["inf"] is not None and rep["ball_mass"]["inf"] > 0
    return (EXIT_PASS if ok else EXIT_FAIL), {"triplet": _label(t), "minorant": _label(nu), "diagnostics": rep}


def _sampler_config(args):
    from .simulate import SamplerConfig

    return SamplerConfig(eps=args.eps, policy=args.policy, seed=args.seed, paths=args.paths,
                         workers=args.workers)


def cmd_simulate_exit(args):
    from .simulate import exit_time

    t = _triplet(args)
    cfg = _sampler_config(args)
    out = [exit_time(t, r, cfg, step_fraction=args.step_fraction).to_dict() for r in args.r]
    rows = [(e["r"], e["estimate"], e["half_width"], e["mean_exit_time"]) for e in out]
    _tables(args, ["r", "product", "half_width", "mean_exit_time"], rows)
    return EXIT_PASS, {"triplet": _label(t), "config": cfg.to_dict(), "exit_time": out}


def _rotation_arg(text, d):
    if text is None:
        return None
    if text.startswith("random:"):
        from .simulate import random_rotation

        return random_rotation(d, int(text.split(":", 1)[1]))
    return _points(_floats(text), d)


def cmd_simulate_cone(args):
    from .simulate import cone_audit

    t = _triplet(args)
    cfg = _sampler_config(args)
    rep = cone_audit(t, args.lam, args.t, rotation=_rotation_arg(args.rotation, t.dim), cfg=cfg)
    _tables(args, ["t", "estimate", "half_width"], zip(rep["times"], rep["estimates"], rep["half_widths"]))
    return (EXIT_PASS if rep["passed"] else EXIT_FAIL), {"triplet": _label(t), "config": cfg.to_dict(),
                                                        "cone": rep}


def cmd_simulate_half_line(args):
    from .simulate import half_line_probability

    t = _triplet(args)
    cfg = _sampler_config(args)
    out = [half_line_probability(t, s, cfg, cross_check=not args.no_cross_check).to_dict() for s in args.t]
    _tables(args, ["t", "estimate", "half_width"], [(e["time"], e["estimate"], e["half_width"]) for e in out])
    return EXIT_PASS, {"triplet": _label(t), "config": cfg.to_dict(), "half_line": out}


def cmd_zoo_list(args):
    from .zoo import ZOO, zoo_listing

    if args.json:
        return EXIT_PASS, {"zoo": {k: v[1] for k, v in ZOO.items()}}
    for line in zoo_listing():
        print(line)
    return EXIT_PASS, None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
def _common(p, triplet=True):
    if triplet:
        p.add_argument("--zoo", help="zoo member, e.g. isotropic_stable:2,1.5")
        p.add_argument("--triplet", metavar="FILE", help="JSON triplet file")
    p.add_argument("--config", metavar="FILE", help="JSON run configuration")
    p.add_argument("--out", metavar="FILE", help="write the JSON report here instead of standard output")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker threads")


def _tables_opts(p, gnuplot=True):
    p.add_argument("--csv", metavar="FILE", help="CSV table output")
    if gnuplot:
        p.add_argument("--gnuplot", metavar="FILE", help="gnuplot data output")


def _minorant_opts(p):
    p.add_argument("--nu", "--minorant", dest="minorant", help="zoo member used as the minorant nu")
    p.add_argument("--nu-file", "--minorant-file", dest="minorant_file", metavar="FILE", help="JSON triplet of nu")


def _sim_opts(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--eps", type=float, default=0.1, help="small-jump cutoff of the generic sampler")
    p.add_argument("--policy", choices=("gaussian-substitute", "drift-only"), default="gaussian-substitute")


def build_parser():
    parser = _Parser(prog="levyhk", description="Levy process heat-kernel toolkit")
    top = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    leaves, sub_names = {}, {}

    def group(name, help_text):
        g = top.add_parser(name, help=help_text)
        sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
        sub_names[id(sub)] = name
        return sub

    def leaf(sub, name, fn, help_text, triplet=True):
        p = sub.add_parser(name, help=help_text)
        _common(p, triplet)
        p.set_defaults(func=fn)
        leaves[(sub_names[id(sub)], name)] = p
        return p

    g = group("triplet", "triplet checks")
    leaf(g, "validate", cmd_triplet_validate, "validate a generating triplet")

    g = group("h", "concentration function")
    p = leaf(g, "eval", cmd_h_eval, "h(r) and K(r)")
    p.add_argument("--r", type=_floats, required=True, help="comma-separated radii")
    _tables_opts(p)
    p = leaf(g, "invert", cmd_h_invert, "h^{-1}(u)")
    p.add_argument("--u", type=_floats, required=True, help="comma-separated levels")
    _tables_opts(p)

    g = group("exponent", "characteristic exponent")
    p = leaf(g, "eval", cmd_exponent_eval, "psi(x)")
    p.add_argument("--x", type=_floats, required=True, help="comma-separated coordinates, d per point")
    _tables_opts(p)

    g = group("conditions", "condition audit")
    p = leaf(g, "audit", cmd_conditions_audit, "run the C, D, A and B checks")
    p.add_argument("--T", type=float, default=1.0, help="time horizon")
    p.add_argument("--include", help="comma-separated subset of C1,C2,C3,C4,C5,C8,D,A,B")

    g = group("density", "transition densities")
    p = leaf(g, "fft", cmd_density_fft, "density grid by FFT inversion")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--n", type=int, help="points per axis")
    p.add_argument("--alias-tol", dest="alias_tol", type=float, default=1e-6)
    _tables_opts(p)
    p = leaf(g, "point", cmd_density_point, "density at points by direct quadrature")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=_floats, required=True, help="comma-separated coordinates, d per point")
    p.add_argument("--rtol", type=float, default=1e-8)
    _tables_opts(p)

    g = group("bounds", "heat-kernel envelopes")
    p = leaf(g, "verify-upper", cmd_bounds_upper, "sup p(t) [h^{-1}(1/t)]^d over dyadic t")
    p.add_argument("--tmin", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--band", type=float, default=1.5)
    _tables_opts(p)
    p = leaf(g, "verify-lower", cmd_bounds_lower, "shifted lower envelope over dyadic t")
    p.add_argument("--tmin", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--theta", type=float, default=5.0)
    p.add_argument("--variant", choices=("gaussian", "symmetric-minorant", "alpha-ge-1"), default="alpha-ge-1")
    _minorant_opts(p)
    p.add_argument("--a1", type=float)
    p.add_argument("--a2", type=float)
    p.add_argument("--force", action="store_true", help="skip the precondition check")
    p.add_argument("--floor", type=float, default=0.01)
    _tables_opts(p)

    g = group("decompose", "small/large jump decomposition")
    p = leaf(g, "diag", cmd_decompose_diag, "class-X diagnostics on the probe lattice")
    _minorant_opts(p)
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a0", type=float)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--r1", type=float, default=1.0)

    g = group("simulate", "Monte Carlo cross-checks")
    p = leaf(g, "exit-time", cmd_simulate_exit, "E[S(r)] h(r)")
    p.add_argument("--r", type=_floats, required=True, help="comma-separated radii")
    p.add_argument("--step-fraction", dest="step_fraction", type=float, default=1e-3)
    _sim_opts(p)
    _tables_opts(p)
    p = leaf(g, "cone", cmd_simulate_cone, "P(Y_t in O C_lambda) and its infimum over t")
    p.add_argument("--t", type=_floats, required=True, help="comma-separated times")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--rotation", help="d*d row-major entries or random:SEED")
    _sim_opts(p)
    _tables_opts(p)
    p = leaf(g, "half-line", cmd_simulate_half_line, "P(Y_t < 0), d = 1")
    p.add_argument("--t", type=_floats, required=True, help="comma-separated times")
    p.add_argument("--no-cross-check", dest="no_cross_check", action="store_true")
    _sim_opts(p)
    _tables_opts(p)

    g = group("zoo", "built-in examples")
    p = leaf(g, "list", cmd_zoo_list, "list the zoo constructors", triplet=False)
    p.add_argument("--json", action="store_true", help="also emit a JSON report")
    return parser, leaves


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BadParameter(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise BadParameter("the run configuration must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise BadParameter(f"unknown configuration keys {sorted(unknown)}")
    if "zoo" in cfg and "triplet" in cfg:
        raise BadParameter("configuration gives both zoo and triplet")
    params, tol = cfg.get("params", {}), cfg.get("tolerances", {})
    if not isinstance(params, dict) or not isinstance(tol, dict):
        raise BadParameter("params and tolerances must be JSON objects")
    bad = set(tol) - TOLERANCE_KEYS
    if bad:
        raise BadParameter(f"unknown tolerance keys {sorted(bad)}")
    values = dict(params)
    values.update(tol)
    for key in ("seed", "out"):
        if key in cfg:
            values[key] = cfg[key]
    if "zoo" in cfg or "triplet" in cfg:
        values["zoo"] = cfg.get("triplet", cfg.get("zoo"))
    return values


def _config_defaults(leaf, values):
    """Install configuration values as defaults of a leaf parser; flags still override them."""
    actions = {a.dest: a for a in leaf._actions}
    for key, value in values.items():
        if key not in actions or key in ("help", "config"):
            raise BadParameter(f"configuration key {key!r} does not apply to this command")
        action = actions[key]
        action.required = False
        action.default = value


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def run(argv=None):
    """Execute one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        path = _config_path(argv)
        if path is not None and len(argv) >= 2:
            leaf = leaves.get((argv[0], argv[1]))
            if leaf is None:
                raise BadParameter(f"unknown command {argv[0]} {argv[1]}")
            _config_defaults(leaf, _load_config(path))
        args = parser.parse_args(argv)
        code, report = args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except InvalidInput as exc:
        print(f"levyhk: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"levyhk: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LevyError as exc:
        print(f"levyhk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, TypeError) as exc:
        print(f"levyhk: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if report is not None:
        body = {"command": f"{args.command} {args.action}", "exit_code": code}
        body.update(report)
        text = serialize.dumps(body)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


def main():
    sys.exit(run())
