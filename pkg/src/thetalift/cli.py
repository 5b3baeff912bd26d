"""Command-line entry point, run configuration and report serialization.

Every command writes one report: the command name, the seed, a snapshot
of the configuration, the result record, a pass flag where a tolerance
applies and a ``timing`` block.  ``timing`` holds the wall time and the
timestamp and is the only part that changes between identical runs.

Exit codes: 0 success, 2 tolerance failure, 1 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lattice import (GramLattice, LatticeError, direct_sum, discriminant_form, isotropic_classes, lattice_from_dict,
                      load_lattice)
from .special import PrecisionConfig

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2
VOLATILE_KEYS = ("timing",)
CACHE_ENV = "WEILREP_CACHE_DIR"


class UsageError(Exception):
    def __init__(self, message: str, help_text: str = ""):
        super().__init__(message)
        self.help_text = help_text


class NonFiniteValue(ValueError):
    """A report contains NaN or an infinity."""


# ------------------------------------------------------------------ config

DEFAULT_BOUNDS = {
    "eis_bound": 40.0,
    "orbit_height": 200.0,
    "lift_height": 200.0,
    "enum_bound": 10.0,
    "theta_tail_tol": 1e-10,
}


def _default_quadrature():
    from .lift import QuadratureSpec
    return QuadratureSpec()


@dataclass
class RunConfig:
    lattice_path: str | None = None
    precision: PrecisionConfig = field(default_factory=PrecisionConfig)
    quadrature: object = field(default_factory=_default_quadrature)
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    output_format: str = "json"
    seed: int = 0

    def __post_init__(self):
        for key, val in self.bounds.items():
            if not (isinstance(val, (int, float)) and val > 0):
                raise UsageError(f"bound {key} must be positive, got {val!r}")
        if self.output_format not in ("json", "csv", "pretty"):
            raise UsageError(f"unknown output format {self.output_format!r}")

    def snapshot(self) -> dict:
        return {
            "lattice_path": self.lattice_path,
            "precision": dataclasses.asdict(self.precision),
            "quadrature": dataclasses.asdict(self.quadrature),
            "bounds": dict(self.bounds),
            "output_format": self.output_format,
            "seed": self.seed,
        }


def load_config(path: str | None) -> RunConfig:
    """Read a JSON config; missing keys keep their defaults."""
    from .lift import QuadratureSpec
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    known = {"lattice_path", "precision", "quadrature", "bounds", "output_format", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        bounds = dict(DEFAULT_BOUNDS)
        bounds.update(raw.get("bounds", {}))
        return RunConfig(
            lattice_path=raw.get("lattice_path"),
            precision=PrecisionConfig(**raw.get("precision", {})),
            quadrature=QuadratureSpec(**raw.get("quadrature", {})),
            bounds=bounds,
            output_format=raw.get("output_format", "json"),
            seed=int(raw.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config {path}: {exc}") from None


# ---------------------------------------------------------- serialization

def to_jsonable(obj, path: str = "$"):
    """Plain JSON data: complex as ``[re, im]``, tuples and arrays as lists.

    Raises :class:`NonFiniteValue` for NaN or infinite floats.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise NonFiniteValue(f"non-finite value {x} at {path}")
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [to_jsonable(z.real, path + ".re"), to_jsonable(z.imag, path + ".im")]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x, f"{path}[{i}]") for i, x in enumerate(obj.tolist())]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name), f"{path}.{f.name}") for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, f"{path}.{k}") for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x, f"{path}[{i}]") for i, x in enumerate(obj)]
    if hasattr(obj, "snapshot"):
        return to_jsonable(obj.snapshot(), path)
    return str(obj)


def flatten(obj, prefix: str = "") -> dict:
    """Nested dicts and lists to one level with dotted keys."""
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}.{i}" if prefix else str(i)))
    else:
        out[prefix] = obj
    return out


_NUMERIC_LIST = re.compile(r"\[\s*((?:-?[0-9][0-9.eE+-]*|true|false|null)(?:,\s*(?:-?[0-9][0-9.eE+-]*|true|false|null))*)\s*\]")


def serialize_report(result, fmt: str = "json") -> bytes:
    """Deterministic bytes for a report (field order is insertion order)."""
    data = to_jsonable(result)
    if fmt == "json":
        text = json.dumps(data, indent=2, allow_nan=False)
        # keep short numeric lists such as [re, im] on one line
        text = _NUMERIC_LIST.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)
        return (text + "\n").encode("utf-8")
    if fmt == "csv":
        flat = flatten(data)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(flat))
        w.writerow(["" if v is None else v for v in flat.values()])
        return buf.getvalue().encode("utf-8")
    if fmt == "pretty":
        flat = flatten(data)
        width = max((len(k) for k in flat), default=0)
        return "".join(f"{k:<{width}}  {v}\n" for k, v in flat.items()).encode("utf-8")
    raise UsageError(f"unknown output format {fmt!r}")


def parse_report(raw: bytes) -> dict:
    return json.loads(raw.decode("utf-8"))


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE_KEYS}


# ------------------------------------------------------------- arguments

def parse_complex(text: str) -> complex:
    """``"3.0+0.0i"``, ``"2.5"`` or ``"0.1+1.2j"``."""
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}") from None


def parse_vector(text: str) -> list:
    t = text.strip().strip("()[]")
    if not t:
        return []
    try:
        return [float(Fraction(x.strip())) for x in t.split(",")]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse vector {text!r}") from None


def parse_Z(text: str) -> tuple:
    """``"<X;Y>"`` with comma separated coordinates."""
    t = text.strip().strip("<>")
    if t.count(";") != 1:
        raise UsageError(f"Z must look like '<x1,x2;y1,y2>', got {text!r}")
    X, Y = t.split(";")
    X, Y = parse_vector(X), parse_vector(Y)
    if len(X) != len(Y):
        raise UsageError("X and Y must have the same length")
    return X, Y


def parse_element(text: str | None, D) -> tuple:
    """Element of ``L'/L`` as comma separated residues; ``0`` is the zero element."""
    if text is None or text.strip() in ("", "0"):
        return D.zero
    try:
        vals = tuple(int(x) for x in text.strip().strip("()[]").split(","))
    except ValueError:
        raise UsageError(f"cannot parse group element {text!r}") from None
    if len(vals) != len(D.orders):
        raise UsageError(f"element {text!r} needs {len(D.orders)} residues (orders {list(D.orders)})")
    return tuple(v % o for v, o in zip(vals, D.orders))


def resolve_lattice(arg: str | None, config: RunConfig) -> GramLattice:
    """A lattice file, or an inline direct sum such as ``U+U+A1(-1)``."""
    spec = arg or config.lattice_path
    if spec is None:
        raise UsageError("no lattice given (use --lattice or lattice_path in the config)")
    try:
        if os.path.exists(spec):
            return load_lattice(spec)
        if spec.lstrip().startswith("{"):
            return lattice_from_dict(json.loads(spec))
        return direct_sum(spec.split("+"), spec)
    except (LatticeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid lattice {spec!r}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_help())


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--format", choices=("json", "csv", "pretty"), help="report format")
    p.add_argument("--output", help="write the report to this file instead of stdout")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="thetalift", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def leaf(parent, name, help_text, lattice=True):
        p = parent.add_parser(name, help=help_text, parents=[common])
        if lattice:
            p.add_argument("--lattice", help="lattice JSON file or inline sum like U+U+A1(-1)")
        return p

    leaf(sub, "lattice", "discriminant form and isotropic classes of a lattice")

    weil = sub.add_parser("weilrep", help="Weil representation").add_subparsers(dest="action", parser_class=_Parser)
    leaf(weil, "dump", "matrices of rho(S) and rho(T)")

    eis = sub.add_parser("eis", help="vector-valued Eisenstein series").add_subparsers(dest="action",
                                                                                        parser_class=_Parser)
    p = leaf(eis, "eval", "evaluate E(tau, s)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--s", default="3.0")
    p.add_argument("--tau", default="0+1i")
    p.add_argument("--bound", type=float)

    theta = sub.add_parser("theta", help="Siegel theta functions").add_subparsers(dest="action",
                                                                                 parser_class=_Parser)
    for name, text in (("eval", "evaluate Theta(tau)"), ("check-transform", "residual of the transformation law")):
        p = leaf(theta, name, text)
        p.add_argument("--tau", default="0.2+0.8i")
        p.add_argument("--kappa", type=int, default=0, help="degree of (x1 + i x2)^kappa (x1^kappa if b+ = 1)")
        p.add_argument("--radius", type=float, help="majorant radius; default from the tail bound")
        if name == "eval":
            p.add_argument("--gamma", default=None, help="one component; default all")
        else:
            p.add_argument("--element", choices=("S", "T"), default="S")
            p.add_argument("--tol", type=float, default=1e-6)

    oeis = sub.add_parser("oeis", help="orthogonal Eisenstein series").add_subparsers(dest="action",
                                                                                    parser_class=_Parser)
    p = leaf(oeis, "eval", "orbit sum over primitive isotropic vectors")
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--delta", default="0")
    p.add_argument("--Z", required=True, help="'<x1,..;y1,..>'")
    p.add_argument("--s", default="2.5")
    p.add_argument("--bound", type=float)

    lift = sub.add_parser("lift", help="regularized theta lift").add_subparsers(dest="action", parser_class=_Parser)
    for name, text in (("eval", "evaluate the lift by one route"), ("compare", "direct integral against the "
                                                                              "Eisenstein route"),
                       ("fourier", "one Fourier coefficient at a level one cusp")):
        p = leaf(lift, name, text)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--s", default="2.5")
        p.add_argument("--beta", default="0")
        if name == "fourier":
            p.add_argument("--Y", required=True, help="comma separated imaginary part")
            p.add_argument("--lambda", dest="lam", required=True, help="comma separated K coordinates")
        else:
            p.add_argument("--Z", help="'<x1,..;y1,..>'; default X = 0 and a q(Y) = 1 point")
            p.add_argument("--height", type=float, help="height bound of the series routes")
        if name == "eval":
            p.add_argument("--route", choices=("direct", "unfolded", "eisenstein"), default="direct")
        if name == "compare":
            p.add_argument("--tol", type=float, default=1e-3)

    ids = sub.add_parser("identities", help="Gamma and zeta identities").add_subparsers(dest="action",
                                                                                      parser_class=_Parser)
    p = leaf(ids, "run", "run the identity suite", lattice=False)
    p.add_argument("--exact-only", action="store_true")
    p.add_argument("--grid-size", type=int, default=50)

    p = leaf(sub, "verify-all", "run every acceptance criterion", lattice=False)
    p.add_argument("--only", help="comma separated criterion numbers")
    p.add_argument("--jobs", type=int, default=1)
    return parser


# --------------------------------------------------------------- commands

def _default_Z(dom):
    if not dom.cusp_in_K:
        raise UsageError("give --Z: K has no isotropic vector to build a default point")
    return [0.0] * dom.dim, (dom.d + dom.d_tilde).tolist()


def _point(dom, text):
    X, Y = parse_Z(text) if text else _default_Z(dom)
    if len(X) != dom.dim:
        raise UsageError(f"Z needs {dom.dim} coordinates, got {len(X)}")
    return dom.point(X, Y)


def cmd_lattice(args, cfg):
    L = resolve_lattice(getattr(args, "lattice", None), cfg)
    D = discriminant_form(L)
    return {
        "name": L.name,
        "gram": [list(r) for r in L.gram],
        "signature": list(L.signature),
        "det": L.det,
        "orders": list(D.orders),
        "elements": [list(e) for e in D.elements],
        "q_values": [str(D.q_values[e]) for e in D.elements],
        "isotropic_classes": [list(e) for e in isotropic_classes(D)],
    }, None


def cmd_weilrep_dump(args, cfg):
    from .weil import WeilRepresentation
    L = resolve_lattice(getattr(args, "lattice", None), cfg)
    rep = WeilRepresentation(discriminant_form(L))
    return {"lattice": L.name, "elements": [list(e) for e in rep.D.elements], "S": rep.S, "T": rep.T}, None


def cmd_eis_eval(args, cfg):
    from .eisenstein import EisParams, eval_E
    L = resolve_lattice(getattr(args, "lattice", None), cfg)
    D = discriminant_form(L)
    B = args.bound if args.bound is not None else cfg.bounds["eis_bound"]
    params = EisParams.for_lattice(L, args.k, parse_element(args.beta, D), parse_complex(args.s))
    tau = parse_complex(args.tau)
    val = eval_E(L, params, tau, B)
    return {"lattice": L.name, "k": params.k, "s": params.s, "tau": tau, "bound": B,
            "elements": [list(e) for e in D.elements], "value": val.values[0],
            "tail_estimate": float(val.tail_estimate[0])}, None


def _theta_setup(args, cfg, tau_values):
    from .lift import _theta_radius
    from .theta import HomoPoly, standard_frame
    L = resolve_lattice(getattr(args, "lattice", None), cfg)
    bp = L.b_plus
    if args.kappa == 0:
        p = HomoPoly.constant(L.rank)
    elif bp >= 2:
        p = HomoPoly.holomorphic_power(bp, args.kappa).extend(L.rank, list(range(bp)))
    else:
        p = (HomoPoly.variable(1, 0) ** args.kappa).extend(L.rank, [0])
    rng = np.random.default_rng(cfg.seed)
    frame = standard_frame(L, perturbation=0.1 * rng.standard_normal((bp, L.rank)))
    v_min = min(t.imag for t in tau_values)
    R = args.radius if args.radius is not None else _theta_radius(L, p, v_min, cfg.bounds["theta_tail_tol"])
    return L, p, frame, R


def cmd_theta_eval(args, cfg):
    from .theta import theta_component
    tau = parse_complex(args.tau)
    L, p, frame, R = _theta_setup(args, cfg, [tau])
    D = discriminant_form(L)
    elems = [parse_element(args.gamma, D)] if args.gamma is not None else list(D.elements)
    values, tail = {}, 0.0
    for g in elems:
        v, t = theta_component(L, g, tau, frame, p, R)
        values[",".join(map(str, g)) or "0"] = complex(v[0])
        tail = max(tail, t)
    return {"lattice": L.name, "tau": tau, "kappa": args.kappa, "radius": R, "values": values,
            "tail_estimate": tail}, None


def cmd_theta_check(args, cfg):
    from .theta import transformation_residual
    from .weil import S, T
    g = S if args.element == "S" else T
    tau = parse_complex(args.tau)
    L, p, frame, R = _theta_setup(args, cfg, [tau, g.act(tau)])
    r = transformation_residual(L, g, tau, frame, p, R)
    return {"lattice": L.name, "element": args.element, "tau": tau, "kappa": args.kappa, "radius": R,
            "residual": r, "tolerance": args.tol}, r <= args.tol


def cmd_oeis_eval(args, cfg):
    from .orthogonal import eisenstein_direct, make_domain
    L = resolve_lattice(getattr(args, "lattice", None), cfg)
    dom = make_domain(L)
    Z = _point(dom, args.Z)
    delta = parse_element(args.delta, discriminant_form(L))
    H = args.bound if args.bound is not None else cfg.bounds["orbit_height"]
    r = eisenstein_direct(args.kappa, delta, Z, parse_complex(args.s), H)
    return {"lattice": L.name, "kappa": args.kappa, "delta": list(delta), "X": Z.X, "Y": Z.Y, "value": r.value,
            "est_error": r.tail_estimate, "n_terms": r.n_terms, "height_bound": r.height_bound}, None


def _lift_setup(args, cfg):
    from .lift import LiftParams
    from .orthogonal import make_domain
    L = resolve_lattice(getattr(args, "lattice", None), cfg)
    D = discriminant_form(L)
    params = LiftParams.for_lattice(L, args.k, parse_complex(args.s), parse_element(args.beta, D))
    return L, make_domain(L), params


def _evaluate_route(route, Z, params, cfg, height):
    from .lift import direct_lift, lift_as_eisenstein, unfolded_lift
    if route == "direct":
        return direct_lift(Z, params, cfg.quadrature)
    if route == "unfolded":
        return unfolded_lift(Z, params, height)
    return lift_as_eisenstein(Z, params, height)


def _evaluation_record(ev):
    return {"route": ev.route, "value": ev.value, "est_error": ev.est_error, "meta": ev.meta}


def cmd_lift_eval(args, cfg):
    L, dom, params = _lift_setup(args, cfg)
    Z = _point(dom, args.Z)
    H = args.height if args.height is not None else cfg.bounds["lift_height"]
    ev = _evaluate_route(args.route, Z, params, cfg, H)
    return {"lattice": L.name, "params": params.snapshot(), "X": Z.X, "Y": Z.Y, **_evaluation_record(ev)}, None


def cmd_lift_compare(args, cfg):
    from concurrent.futures import ThreadPoolExecutor
    L, dom, params = _lift_setup(args, cfg)
    Z = _point(dom, args.Z)
    H = args.height if args.height is not None else cfg.bounds["lift_height"]
    with ThreadPoolExecutor(max_workers=2) as pool:
        fd = pool.submit(_evaluate_route, "direct", Z, params, cfg, H)
        fe = pool.submit(_evaluate_route, "eisenstein", Z, params, cfg, H)
        d, e = fd.result(), fe.result()
    gap = abs(d.value - e.value) / abs(e.value)
    return {"lattice": L.name, "params": params.snapshot(), "X": Z.X, "Y": Z.Y, "direct": _evaluation_record(d),
            "eisenstein": _evaluation_record(e), "relative_gap": gap, "tolerance": args.tol}, gap <= args.tol


def _cache_file(L, params, eis_bound):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    key = json.dumps([[list(r) for r in L.gram], params.k, list(params.beta), [params.s.real, params.s.imag],
                      eis_bound])
    return os.path.join(root, "samples-" + hashlib.sha256(key.encode()).hexdigest()[:16] + ".json")


def load_samples(ctx, path) -> int:
    """Fill the coefficient-sample cache of a FourierContext from disk."""
    if path is None or not os.path.exists(path):
        return 0
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    for delta, m, v, real, imag in rows:
        ctx._samples[(tuple(delta), m, v)] = complex(real, imag)
    return len(rows)


def store_samples(ctx, path) -> None:
    if path is None:
        return
    os.makedirs(os.path.dirname(path), exist_ok=True)
    rows = sorted([list(k[0]), k[1], k[2], v.real, v.imag] for k, v in ctx._samples.items())
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(rows, fh)
    os.replace(tmp, path)


def cmd_lift_fourier(args, cfg):
    from .lift import FourierContext, fourier_coeff_b
    L, dom, params = _lift_setup(args, cfg)
    Y = parse_vector(args.Y)
    lam = parse_vector(args.lam)
    if len(Y) != dom.dim or len(lam) != dom.dim:
        raise UsageError(f"--Y and --lambda need {dom.dim} coordinates")
    eb = cfg.quadrature.eis_bound
    ctx = FourierContext(dom, params, eb)
    path = _cache_file(L, params, eb)
    loaded = load_samples(ctx, path)
    rec = fourier_coeff_b(ctx, [Fraction(x).limit_denominator(10 ** 6) for x in lam], Y)
    store_samples(ctx, path)
    return {"lattice": L.name, "params": params.snapshot(), "lambda": list(rec.lam), "Y": list(rec.Y),
            "case": rec.case_tag, "value": rec.value, "est_error": rec.est_error,
            "cached_samples": loaded}, None


def cmd_identities_run(args, cfg):
    from .identities import run_suite
    lines = run_suite(seed=cfg.seed, exact_only=args.exact_only, grid_size=args.grid_size)
    table = [{"identity": ln.name, "cases": ln.cases, "max_residual": ln.max_residual, "tolerance": ln.tolerance,
              "passed": ln.passed} for ln in lines]
    return {"lines": table}, all(ln.passed for ln in lines)


def cmd_verify_all(args, cfg):
    from . import acceptance
    chosen = None
    if args.only:
        try:
            chosen = {int(x) for x in args.only.split(",")}
        except ValueError:
            raise UsageError(f"cannot parse --only {args.only!r}") from None
    if chosen is None:
        results = acceptance.run_all(args.jobs)
    else:
        results = [acceptance.CRITERIA[n - 1]() for n in acceptance.ORDER if n in chosen]
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "metric": r.metric,
             "tolerance": r.tolerance, "details": r.details} for r in results]
    return {"criteria": rows}, all(r.passed for r in results)


COMMANDS = {
    ("lattice", None): cmd_lattice,
    ("weilrep", "dump"): cmd_weilrep_dump,
    ("eis", "eval"): cmd_eis_eval,
    ("theta", "eval"): cmd_theta_eval,
    ("theta", "check-transform"): cmd_theta_check,
    ("oeis", "eval"): cmd_oeis_eval,
    ("lift", "eval"): cmd_lift_eval,
    ("lift", "compare"): cmd_lift_compare,
    ("lift", "fourier"): cmd_lift_fourier,
    ("identities", "run"): cmd_identities_run,
    ("verify-all", None): cmd_verify_all,
}


def cmd_dispatch(argv) -> int:
    """Parse ``argv``, run the command and write its report; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command", parser.format_help())
        key = (args.command, getattr(args, "action", None))
        if key not in COMMANDS:
            raise UsageError(f"missing action for {args.command!r}", parser.format_help())
        cfg = load_config(getattr(args, "config", None))
        if hasattr(args, "format"):
            cfg.output_format = args.format
        if hasattr(args, "seed"):
            cfg.seed = args.seed
        t0 = time.perf_counter()
        result, passed = COMMANDS[key](args, cfg)
        wall = time.perf_counter() - t0
        report = {"command": " ".join(k for k in key if k), "seed": cfg.seed, "config": cfg.snapshot(),
                  "result": result}
        if passed is not None:
            report["passed"] = bool(passed)
        report["timing"] = {"wall_time": wall,
                            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
        data = serialize_report(report, cfg.output_format)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        if exc.help_text:
            print(exc.help_text, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ValueError, ArithmeticError) as exc:
        # invalid mathematical input (non-isotropic beta, Y outside the cone, a pole, ...)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = getattr(args, "output", None)
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return EXIT_OK if passed is None or passed else EXIT_TOLERANCE


def main(argv=None) -> int:
    return cmd_dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
