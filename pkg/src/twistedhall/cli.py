"""Command line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 64 unknown flag.
JSON goes to stdout unless ``--output DIR`` is given, in which case the file
``DIR/<command>.<format>`` is written.
"""

from __future__ import annotations

import argparse
import ast
import io
import json
import math
import operator
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import cocycles as cc
from . import conductance as cd
from . import groups as gr
from . import signatures as sg
from . import twistedalg as ta
from ._validation import NumericalFailure, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64
SPECTRAL_TOL = 1e-10


class UsageError(Exception):
    pass


# ---- value parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_real(text: str):
    """A number, an exact ``p/q`` (kept as a Fraction) or an expression in ``pi``."""
    text = str(text).strip()
    try:
        return Fraction(text) if "." not in text and "e" not in text.lower() else float(text)
    except ValueError:
        pass

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError
    try:
        return float(ev(ast.parse(text.replace("π", "pi"), mode="eval")))
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise ValidationError(f"cannot read {text!r} as a number") from None


def parse_grid(text: str) -> list[float]:
    """``a:b:n`` -> n evenly spaced values from a to b inclusive."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid {text!r} must look like a:b:n")
    a, b = float(parse_real(parts[0])), float(parse_real(parts[1]))
    try:
        n = int(parts[2])
    except ValueError:
        raise ValidationError(f"grid count {parts[2]!r} is not an integer") from None
    if n < 1:
        raise ValidationError("grid needs at least one point")
    return [float(x) for x in np.linspace(a, b, n)]


@dataclass
class RunConfig:
    """Every option of a run; ``canonical()`` round-trips through ``from_dict``."""

    command: str
    signature: str | None = None
    theta_tilde: str | None = None
    radius: int | None = None
    grid: str | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)
    output: str | None = None
    format: str | None = None

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)


# ---- output helpers

def _jsonable(obj):
    if isinstance(obj, Fraction):
        return sg.fraction_str(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _emit(args, payload, kind: str) -> None:
    text = payload if kind == "csv" else json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        with open(os.path.join(args.output, f"{args.command}.{kind}"), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _signature(args) -> sg.Signature:
    if not args.signature:
        raise ValidationError("--signature is required")
    return sg.Signature.parse(args.signature)


def _radius(args, minimum: int = 0) -> int:
    if args.radius is None:
        raise ValidationError("--radius is required")
    if args.radius < minimum:
        raise ValidationError(f"--radius must be >= {minimum}")
    return args.radius


def _theta_tilde(args):
    if args.theta_tilde is None:
        raise ValidationError("--theta-tilde is required")
    return parse_real(args.theta_tilde)


# ---- commands

def cmd_invariants(args):
    _emit(args, sg.invariants(_signature(args)), "json")


def cmd_realize(args):
    sig = _signature(args)
    real = gr.realize(sig, args.seed)
    names = real.presentation.generator_names
    diag = {k: v for k, v in real.diagnostics.items() if k != "polygon_vertices"}
    out = {
        "signature": str(sig),
        "geometry": real.geometry.name,
        "generators": {n: [complex(x).real if real.geometry.name == "hyperbolic" else complex(x)
                           for x in m.ravel()] for n, m in zip(names, real.generators)},
        "relator_residuals": real.relator_residuals(),
        "residual": real.residual,
        "fundamental_class_area": gr.fundamental_class_area(real),
        "fundamental_area": real.fundamental_area,
        "diagnostics": diag,
        "tolerance": 1e-9,
    }
    _emit(args, out, "json")


def _ball(args, minimum=0):
    sig = _signature(args)
    return sig, gr.cayley_ball(gr.realize(sig, args.seed), _radius(args, minimum), args.multiplicity)


def cmd_ball(args):
    sig, ball = _ball(args)
    if (args.format or "csv") == "json":
        _emit(args, {"signature": str(sig), "radius": ball.radius, "size": len(ball),
                     "min_separation": ball.audit(), "letters": ball.letters}, "json")
        return
    buf = io.StringIO()
    buf.write("id,word,length,orbit_x,orbit_y,abelianization\n")
    for x in range(len(ball)):
        z = ball.points[x]
        ab = " ".join(str(int(v)) for v in ball.abelian[x])
        buf.write(f"{x},{ball.word_string(x)},{ball.lengths[x]},{z.real:.15g},{z.imag:.15g},{ab}\n")
    _emit(args, buf.getvalue(), "csv")


def _dataset_csv(data: ta.SpectrumDataset) -> str:
    buf = io.StringIO()
    data.to_csv(buf)
    return buf.getvalue()


def cmd_spectrum(args):
    sig = _signature(args)
    data = ta.butterfly(sig, [float(_theta_tilde(args))], _radius(args, 1), args.seed)
    _emit(args, _dataset_csv(data), "csv")


def cmd_butterfly(args):
    sig = _signature(args)
    if not args.grid:
        raise ValidationError("--grid a:b:n is required")
    data = ta.butterfly(sig, parse_grid(args.grid), _radius(args, 1), args.seed, workers=args.workers)
    _emit(args, _dataset_csv(data), "csv")


def bulk_gaps(sig, theta_tilde, R, seed, min_width, threshold, stable=True):
    real = gr.realize(sig, seed)

    def at(r):
        M = ta.harper_matrix(real, r, float(theta_tilde))
        return ta.gaps(ta.eigensystem(M).bulk_values(threshold), min_width)

    found = at(R)
    if stable and R >= 2:
        found = ta.stable_gaps(found, at(R - 1), min_width)
    return found


def cmd_gaps(args):
    sig = _signature(args)
    tt = _theta_tilde(args)
    found = bulk_gaps(sig, tt, _radius(args, 1), args.seed, args.min_width, args.bulk_threshold,
                      not args.no_stability)
    _emit(args, {"theta_tilde": float(tt), "gaps": [list(g) for g in found], "tolerance": SPECTRAL_TOL}, "json")


def cmd_conductance(args):
    sig = _signature(args)
    if args.energy is None:
        raise ValidationError("--energy is required")
    rep = cd.hall_conductance(sig, float(_theta_tilde(args)), float(parse_real(args.energy)), _radius(args, 1),
                              args.inner_radius, args.seed, args.method, args.multiplicity, args.min_width)
    _emit(args, rep.to_dict(), "json")


def cmd_plateau_scan(args):
    sig = _signature(args)
    if not args.grid:
        raise ValidationError("--grid a:b:n is required")
    rows = cd.plateau_scan(sig, float(_theta_tilde(args)), parse_grid(args.grid), _radius(args, 1),
                           args.inner_radius, args.seed, args.min_width)
    body = ",".join(cd.PlateauRow.header) + "\n" + "".join(r.csv() + "\n" for r in rows)
    _emit(args, body, "csv")


def cmd_classify_theta(args):
    sig = _signature(args)
    if args.theta is None or args.theta_prime is None:
        raise ValidationError("--theta and --theta-prime are required")
    t, tp = sg.as_fraction(args.theta), sg.as_fraction(args.theta_prime)
    _emit(args, {"signature": str(sig), "theta": t, "theta_prime": tp,
                 "equivalent": sg.classification_equivalent(sig, t, tp),
                 "orbit": sg.equivalent_thetas(sig, t)}, "json")


def cmd_seifert(args):
    if args.c1 is None:
        raise ValidationError("--c1 is required")
    data = sg.SeifertData(args.c1, sg.parse_pairs(args.pair or []))
    ch = sg.chern_character(data)
    _emit(args, {"c1": data.c1, "pairs": [list(p) for p in data.pairs],
                 "orbifold_euler_number": sg.orbifold_euler_number(data),
                 "chern_character": {"rank": ch.rank, "c1": ch.c1, "phases": [list(p) for p in ch.phases]},
                 "equivariant_euler_pairing": sg.equivariant_euler_pairing(data), "tolerance": 1e-12}, "json")


def cmd_cocycle(args):
    sig = _signature(args)
    real = gr.realize(sig, args.seed)
    if args.action == "defect":
        ball = gr.cayley_ball(real, _radius(args, 3))
        fit = cc.solve_coboundary_defect(ball)
        _emit(args, {"signature": str(sig), "radius": ball.radius, "scale": fit.scale, "residual": fit.residual,
                     "defect_rms": fit.defect_rms, "equations": fit.equations, "tolerance": 1e-9}, "json")
        return
    pres = real.presentation
    x, y = pres.parse_word(args.x or "e"), pres.parse_word(args.y or "e")
    R = args.radius if args.radius is not None else len(x) + len(y)
    ball = gr.cayley_ball(real, R)
    ix, iy = ball.element(x), ball.element(y)
    if gr.OUT in (ix, iy) or ball.multiply(ix, iy) == gr.OUT:
        raise ValidationError("words do not fit in the ball; raise --radius")
    tt = float(parse_real(args.theta_tilde)) if args.theta_tilde is not None else 0.0
    out = {"x": pres.format_word(x), "y": pres.format_word(y), "xy": ball.word_string(ball.multiply(ix, iy)),
           "area": cc.area_cocycle(ball, ix, iy), "sigma": cc.MagneticMultiplier(ball, tt)(ix, iy),
           "psi_sum": cc.psi_sum(ball, ix, iy) if real.genus else 0,
           "kubo": float(cc.kubo_cocycle(ball, ix, iy)) if real.genus else 0.0,
           "theta_tilde": tt, "tolerance": 1e-12}
    _emit(args, out, "json")


COMMANDS = {
    "invariants": (cmd_invariants, "exact invariants of a signature (JSON)"),
    "realize": (cmd_realize, "generator matrices and relator residuals (JSON)"),
    "ball": (cmd_ball, "Cayley ball; CSV columns id,word,length,orbit_x,orbit_y,abelianization"),
    "spectrum": (cmd_spectrum, "Harper spectrum; CSV columns theta_tilde,theta,index,eigenvalue"),
    "butterfly": (cmd_butterfly, "flux sweep; CSV columns theta_tilde,theta,index,eigenvalue"),
    "gaps": (cmd_gaps, "bulk spectral gaps stable across radii R and R-1 (JSON)"),
    "conductance": (cmd_conductance, "pairings and Hall conductance at one energy (JSON)"),
    "plateau-scan": (cmd_plateau_scan, "conductance on an energy grid; CSV columns E,trace,trc,trK,nearest_k,deviation"),
    "classify-theta": (cmd_classify_theta, "isomorphism test for two flux values (JSON)"),
    "seifert": (cmd_seifert, "orbifold Euler number and Chern character of Seifert data (JSON)"),
    "cocycle": (cmd_cocycle, "spot evaluation of cocycles, or the coboundary fit (JSON)"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--signature", help='signature "g;v1,v2,..."')
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--radius", type=int)
    common.add_argument("--output", help="directory to write <command>.<format> into")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--config", help="JSON file whose keys mirror the flags; flags win")
    common.add_argument("--multiplicity", action="store_true", help="count C and C^-1 separately when C^2 = 1")
    parser = _Parser(prog="twistedhall", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("spectrum", "butterfly", "gaps", "conductance", "plateau-scan"):
            p.add_argument("--theta-tilde", default=None if name != "butterfly" else "0")
        if name in ("butterfly", "plateau-scan"):
            p.add_argument("--grid", help="a:b:n")
        if name == "butterfly":
            p.add_argument("--workers", type=int, default=1)
        if name in ("gaps", "conductance", "plateau-scan"):
            p.add_argument("--min-width", type=float, default=0.05 if name == "gaps" else 1e-3)
        if name == "gaps":
            p.add_argument("--bulk-threshold", type=float, default=0.2)
            p.add_argument("--no-stability", action="store_true")
        if name in ("conductance", "plateau-scan"):
            p.add_argument("--inner-radius", type=int)
        if name == "conductance":
            p.add_argument("--energy")
            p.add_argument("--method", choices=["eigh", "chebyshev"], default="eigh")
        if name == "classify-theta":
            p.add_argument("--theta")
            p.add_argument("--theta-prime")
        if name == "seifert":
            p.add_argument("--c1", type=int)
            p.add_argument("--pair", action="append", help="beta/nu, repeatable")
        if name == "cocycle":
            p.add_argument("action", choices=["eval", "defect"])
            p.add_argument("--x")
            p.add_argument("--y")
            p.add_argument("--theta-tilde")
    return parser


def _apply_config(parser, argv):
    """Parse once to find --config, load it as defaults, parse again so flags override."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            conf = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(conf, dict):
        raise ValidationError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(k.replace("-", "_") for k in conf) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in conf.items()})
    return parser.parse_args(argv)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, sys.argv[1:] if argv is None else list(argv))
        COMMANDS[args.command][0](args)
    except UsageError:
        return EXIT_USAGE
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except NumericalFailure as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
