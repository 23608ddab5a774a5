"""Command-line interface: evaluation, resummation, identity checks, audits,
grid scans and the full verification suite.

Complex numbers are written ``re`` or ``re,im``.  A leading minus needs the
``--x=-0.9,0.1`` form so argparse does not read it as a flag.

Exit codes: 0 success, 1 a verification failed, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergence, QStokesError
from .qcore import Base, HyperSpec, phi, theta
from . import qconnect as qc
from .qresum import resum_2f0, resum_rf0
from .report import cpair

COMMANDS = ("eval", "resum", "verify", "audit", "scan", "suite")
EVAL_FUNCTIONS = ("Aq", "Aiq", "Aiq_mirror", "eq", "Eq", "theta", "phi", "u1", "v1", "v2", "u2_resummed")
SCAN_FUNCTIONS = EVAL_FUNCTIONS + ("resum_2f0", "resum_rf0", "C11", "C12", "C21", "C22")
PRECISION_QMAX = 0.9
DEFAULT_SUITE_LAMBDA = complex(0.77, 0.21)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {text!r}")


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    steps_re: int
    steps_im: int

    def __post_init__(self):
        if self.steps_re < 1 or self.steps_im < 1:
            raise ValueError("grid steps must be >= 1")

    def points(self) -> list[complex]:
        re = np.linspace(self.re_min, self.re_max, self.steps_re)
        im = np.linspace(self.im_min, self.im_max, self.steps_im)
        return [complex(a, b) for b in im for a in re]


def parse_grid(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("grid needs re_min,re_max,im_min,im_max,steps_re,steps_im")
    try:
        return GridSpec(*map(float, parts[:4]), int(parts[4]), int(parts[5]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"malformed grid {text!r}: {exc}") from None


def read_config(path: str) -> list[str]:
    """Flat key=value file mirroring long flags; '#' starts a comment."""
    tokens: list[str] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                tokens.append(flag)
            else:
                tokens.append(f"{flag}={value}")
    return tokens


def _add_common(p: argparse.ArgumentParser, points: bool = True) -> None:
    p.add_argument("--q", type=parse_complex, default=complex(0.5), help="base q (default 0.5)")
    p.add_argument("--lambda", dest="lam", type=parse_complex, default=None, help="spiral parameter lambda")
    if points:
        p.add_argument("--x", type=parse_complex, action="append", default=None, help="evaluation point (repeatable)")
        p.add_argument("--grid", type=parse_grid, default=None, help="re_min,re_max,im_min,im_max,steps_re,steps_im")
        p.add_argument("--random", type=int, default=None, metavar="N", help="N seeded random points")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qstokes", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", default=None, help="key=value file with default flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a special function or local solution")
    _add_common(p)
    p.add_argument("--fn", required=True, choices=EVAL_FUNCTIONS)
    p.add_argument("--upper", type=parse_complex, action="append", default=[], help="phi upper parameter (repeatable)")
    p.add_argument("--lower", type=parse_complex, action="append", default=[], help="phi lower parameter (repeatable)")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("resum", help="q-Borel/q-Laplace resummation of 2phi0 or rphi0")
    _add_common(p)
    p.add_argument("--kind", choices=("2f0", "rf0"), default="2f0")
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("verify", help="check one identity at one or more points")
    _add_common(p)
    p.add_argument("--id", dest="identity", required=True, choices=qc.IDENTITIES)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--row", type=int, default=1, choices=(1, 2))
    p.add_argument("--normalization", default=None)
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("audit", help="compare printed normalizations against the resummation")
    _add_common(p, points=False)
    p.add_argument("--id", dest="identity", required=True,
                   choices=("two_f_zero", "main_matrix", "main_matrix_row1", "level_r", "qexp_pair"))
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--tol", type=float, default=qc.AUDIT_RTOL)

    p = sub.add_parser("scan", help="evaluate a function on a grid, CSV output")
    _add_common(p)
    p.add_argument("--fn", required=True, choices=SCAN_FUNCTIONS)
    p.add_argument("--r", type=int, default=3)

    p = sub.add_parser("suite", help="run the verification battery at one base")
    _add_common(p, points=False)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--tol", type=float, default=None, help="override every identity tolerance")
    p.add_argument("--exclude", action="append", default=[], help="family to skip (repeatable)")
    p.add_argument("--reports", action="store_true", help="also emit every report")
    return parser


def _expand_argv(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return rest
    tokens = read_config(known.config)
    for i, tok in enumerate(rest):
        if tok in COMMANDS:
            return rest[: i + 1] + tokens + rest[i + 1 :]
    raise UsageError("config file given without a command")


@contextmanager
def _sink(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _base(args) -> Base:
    try:
        return Base(args.q)
    except (ValueError, QStokesError) as exc:
        raise UsageError(str(exc)) from None


def _points(args, base: Base, avoid=()) -> list[complex]:
    pts: list[complex] = list(args.x or [])
    if getattr(args, "grid", None) is not None:
        pts += args.grid.points()
    if getattr(args, "random", None):
        pts += qc.sample_points(base, args.random, args.seed, avoid)
    if not pts:
        raise UsageError("give --x, --grid or --random")
    return pts


def _evaluator(name: str, args, base: Base):
    lam = args.lam
    if name in ("u2_resummed", "resum_2f0", "resum_rf0", "C21", "C22") and lam is None:
        raise UsageError(f"{name} needs --lambda")
    if name == "theta":
        return lambda x: theta(base, x)
    if name == "phi":
        spec = HyperSpec(tuple(args.upper), tuple(args.lower), base)
        return lambda x: phi(spec, x)
    if name == "resum_2f0":
        return lambda x: resum_2f0(base, lam, x)
    if name == "resum_rf0":
        return lambda x: resum_rf0(args.r, base, lam, x)
    if name in ("C11", "C12"):
        fn = getattr(qc, name)
        return lambda x: fn(base, x)
    if name in ("C21", "C22"):
        fn = getattr(qc, f"{name}_derived")
        return lambda x: fn(base, lam, x)
    return lambda x: qc.eval_solution(name, base, x, lam)


def _emit(records: list[dict], fmt: str, out) -> None:
    if fmt == "csv":
        w = csv.writer(out)
        w.writerow(["re_x", "im_x", "re_val", "im_val"])
        for r in records:
            w.writerow([*r["x"], *r["value"]])
    else:
        for r in records:
            out.write(json.dumps(r, sort_keys=True) + "\n")


def cmd_eval(args) -> int:
    base = _base(args)
    f = _evaluator(args.fn, args, base)
    records = []
    for x in _points(args, base):
        rec = {"function": args.fn, "q": cpair(base.q), "x": cpair(x), "value": cpair(f(x))}
        if args.fn == "phi":
            rec["upper"] = [cpair(a) for a in args.upper]
            rec["lower"] = [cpair(b) for b in args.lower]
        if args.lam is not None:
            rec["lambda"] = cpair(args.lam)
        if args.fn == "Aiq_mirror":
            rec["branch"] = "principal"
        records.append(rec)
    with _sink(args.output) as out:
        _emit(records, args.format, out)
    return EXIT_OK


def cmd_resum(args) -> int:
    base = _base(args)
    if args.lam is None:
        raise UsageError("resum needs --lambda")
    records = []
    for x in _points(args, base):
        if args.kind == "2f0":
            val = resum_2f0(base, args.lam, x, args.window)
            fn = "resum_2f0"
        else:
            val = resum_rf0(args.r, base, args.lam, x, args.window)
            fn = f"resum_rf0({args.r})"
        records.append({"function": fn, "q": cpair(base.q), "lambda": cpair(args.lam), "x": cpair(x), "value": cpair(val)})
    with _sink(args.output) as out:
        _emit(records, args.format, out)
    return EXIT_OK


def cmd_verify(args) -> int:
    base = _base(args)
    avoid = qc.excluded_sets(args.identity, base, args.lam, args.r)
    pts = _points(args, base, avoid)
    single = len(pts) == 1
    reports = []
    skipped = 0
    for x in pts:
        try:
            rep = qc.verify_identity(
                args.identity, base, x, lam=args.lam, r=args.r, row=args.row,
                normalization=args.normalization, tol=args.tol,
            )
        except DomainError:
            if single:
                raise
            skipped += 1
            continue
        reports.append(rep)
    reports.sort(key=lambda r: (r.identity_id, r.x.real, r.x.imag))
    with _sink(args.output) as out:
        for rep in reports:
            out.write(rep.to_json() + "\n")
    if skipped:
        print(f"skipped {skipped} excluded point(s)", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_audit(args) -> int:
    base = _base(args)
    lam = args.lam
    avoid = qc.excluded_sets("main_matrix" if args.identity == "main_matrix_row1" else args.identity, base, lam, args.r)
    sample = qc.sample_points(base, args.samples, args.seed, avoid, rmin=0.3, rmax=3.0)
    rep = qc.audit_normalization(args.identity, base, lam=lam, sample=sample, r=args.r, tol=args.tol)
    d = rep.to_dict()
    d["seed"] = args.seed
    with _sink(args.output) as out:
        out.write(json.dumps(d, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_scan(args) -> int:
    base = _base(args)
    f = _evaluator(args.fn, args, base)
    pts = _points(args, base)
    with _sink(args.output) as out:
        w = csv.writer(out)
        w.writerow(["re_x", "im_x", "re_val", "im_val", "status"])
        for x in pts:
            try:
                v = complex(f(x))
                status = "ok"
            except DomainError:
                v, status = complex(float("nan"), float("nan")), "excluded"
            except (NonConvergence, ArithmeticError):
                v, status = complex(float("nan"), float("nan")), "failed"
            w.writerow([repr(x.real), repr(x.imag), repr(v.real), repr(v.imag), status])
    return EXIT_OK


def suite_families(base: Base, lam: complex) -> list[tuple[str, str, dict, dict]]:
    """(family label, identity id, verify kwargs, sampling kwargs)."""
    return [
        ("qexp_pair", "qexp_pair", {}, {"rmax": 0.95}),
        ("qexp_inverse_base", "qexp_inverse_base", {}, {}),
        ("eq_vs_Eq", "eq_vs_Eq", {}, {}),
        ("eq_alternate", "eq_alternate", {}, {}),
        ("eq_rsplit(2)", "eq_rsplit", {"r": 2}, {}),
        ("eq_rsplit(3)", "eq_rsplit", {"r": 3}, {}),
        ("eq_rsplit(4)", "eq_rsplit", {"r": 4}, {}),
        ("two_f_zero", "two_f_zero", {"lam": lam}, {}),
        ("main_matrix(row1)", "main_matrix", {"row": 1}, {}),
        ("main_matrix(row2)", "main_matrix", {"row": 2, "lam": lam}, {}),
        ("ismail_zhang", "ismail_zhang", {}, {}),
        ("ram_qairy", "ram_qairy", {}, {}),
        ("ram_qairy_pipeline", "ram_qairy_pipeline", {}, {"rmin": 0.5, "rmax": 2.0}),
        ("level_r(3)", "level_r", {"r": 3, "lam": lam}, {}),
    ]


def run_suite(base: Base, lam: complex, points: int = 20, seed: int = 0, tol: float | None = None, exclude=()):
    summary, reports = [], []
    for k, (label, ident, kw, samp) in enumerate(suite_families(base, lam)):
        if label in exclude or ident in exclude:
            continue
        avoid = qc.excluded_sets(ident, base, kw.get("lam"), kw.get("r"))
        xs = qc.sample_points(base, points, seed + k, avoid, **samp)
        fam = []
        for x in xs:
            try:
                fam.append(qc.verify_identity(ident, base, x, tol=tol, **kw))
            except (NonConvergence, ArithmeticError) as exc:
                fam.append(None)
                print(f"{label}: numerical failure at x={x}: {exc}", file=sys.stderr)
        ok = [r for r in fam if r is not None]
        summary.append({
            "family": label,
            "points": len(fam),
            "passed": sum(r.passed for r in ok),
            "worst_rel_err": max((r.rel_err for r in ok), default=float("nan")),
            "tol": ok[0].tol if ok else tol,
        })
        reports += ok
    return summary, reports


def cmd_suite(args) -> int:
    base = _base(args)
    if abs(base.q) > PRECISION_QMAX:
        raise UsageError(f"|q| = {abs(base.q):.3g} is outside the precision domain |q| <= {PRECISION_QMAX}")
    lam = args.lam if args.lam is not None else DEFAULT_SUITE_LAMBDA
    summary, reports = run_suite(base, lam, args.points, args.seed, args.tol, tuple(args.exclude))
    all_pass = all(s["passed"] == s["points"] for s in summary)
    with _sink(args.output) as out:
        if args.reports:
            for rep in sorted(reports, key=lambda r: (r.identity_id, r.x.real, r.x.imag)):
                out.write(rep.to_json() + "\n")
        out.write(json.dumps({
            "q": cpair(base.q), "lambda": cpair(lam), "seed": args.seed,
            "families": summary, "all_pass": all_pass,
        }, sort_keys=True) + "\n")
    return EXIT_OK if all_pass else EXIT_FAIL


HANDLERS = {
    "eval": cmd_eval,
    "resum": cmd_resum,
    "verify": cmd_verify,
    "audit": cmd_audit,
    "scan": cmd_scan,
    "suite": cmd_suite,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_argv(argv)
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QStokesError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
