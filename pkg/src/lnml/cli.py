"""Command-line interface.

Subcommands::

    lnml codelen      batch code length of a CSV data set
    lnml predict      per-observation sequential code lengths
    lnml changepoint  MDL segmentation
    lnml verify       closed forms against numerical oracles

Exit status is 0 on success, 1 when ``verify`` finds a mismatch and 2 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import oracle
from .capacity import log_capacity_general
from .changepoint import detect_multi_change
from .codelength import log_lnml, lnml_report
from .errors import DimensionError, DomainError, NotPositiveDefiniteError
from .model import LuckinessParams, default_luckiness
from .sequential import iter_predictions

FORMAT_ENV = "LNML_FORMAT"
_LN2 = math.log(2.0)


class UsageError(Exception):
    pass


def _num(v):
    return float(f"{v:.9g}")


def _fmt(v):
    return f"{v:.9g}"


def read_csv_matrix(stream, header=False, what="input"):
    """Parse comma-separated rows of reals into an ``(n, m)`` array.

    ``m`` is taken from the first data row and enforced for the rest.
    """
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if header and lineno == 1:
            continue
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise UsageError(f"{what}: row {lineno} has {len(row)} columns, expected {width}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise UsageError(f"{what}: row {lineno}, column {col}: not a number: {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise UsageError(f"{what}: row {lineno}, column {col}: non-finite value")
            vals.append(v)
        rows.append(vals)
    if not rows:
        return np.empty((0, 0))
    return np.array(rows, dtype=float)


def load_data(path, header):
    try:
        if path == "-":
            stream = io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8")
            x = read_csv_matrix(stream, header)
        else:
            with open(path, encoding="utf-8", newline="") as fh:
                x = read_csv_matrix(fh, header)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise UsageError(f"{path} is not valid UTF-8") from None
    if x.shape[0] < 1:
        raise UsageError("n must be ≥ 1")
    return x


def _parse_mu0(text, m):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"mu0: cannot parse {text!r} as comma-separated reals") from None
    if len(vals) != m:
        raise UsageError(f"mu0: expected {m} values, got {len(vals)}")
    return np.array(vals)


def _parse_sigma0(text, m):
    try:
        return float(text) * np.eye(m)
    except ValueError:
        pass
    try:
        with open(text, encoding="utf-8", newline="") as fh:
            mat = read_csv_matrix(fh, what="sigma0")
    except OSError:
        raise UsageError(f"sigma0: {text!r} is neither a number nor a readable CSV file") from None
    if mat.shape != (m, m):
        raise UsageError(f"sigma0: expected a {m}x{m} matrix, got {mat.shape[0]}x{mat.shape[1]}")
    return mat


def resolve_luckiness(args, m):
    """Build validated hyperparameters from explicit flags or the default heuristic."""
    explicit = {"nu": args.nu, "sigma0": args.sigma0, "rho2": args.rho2}
    given = [k for k, v in explicit.items() if v is not None]
    try:
        if given:
            missing = [k for k in explicit if explicit[k] is None]
            if missing:
                raise UsageError(f"{missing[0]}: required when any of --nu/--sigma0/--rho2 is given")
            mu0 = _parse_mu0(args.mu0, m) if args.mu0 is not None else np.zeros(m)
            return LuckinessParams(args.nu, mu0, _parse_sigma0(args.sigma0, m), args.rho2)
        if args.sigma2_floor is None or args.radius_R is None:
            name = "sigma2-floor" if args.sigma2_floor is None else "radius-R"
            raise UsageError(f"{name}: give --nu/--sigma0/--rho2, or both --sigma2-floor and --radius-R")
        if args.mu0 is not None:
            raise UsageError("mu0: not used with --sigma2-floor/--radius-R defaults")
        return default_luckiness(m, args.sigma2_floor, args.radius_R)
    except (DomainError, DimensionError, NotPositiveDefiniteError) as exc:
        raise UsageError(str(exc)) from None


class Emitter:
    def __init__(self, fmt, out):
        self.fmt = fmt
        self.out = out

    def record(self, obj, text):
        if self.fmt == "jsonl":
            self.out.write(json.dumps(obj, ensure_ascii=False) + "\n")
        else:
            self.out.write(text + "\n")


def _lp_fields(lp):
    return {
        "nu": _num(lp.nu),
        "mu0": [_num(v) for v in lp.mu0],
        "sigma0": [[_num(v) for v in row] for row in lp.sigma0],
        "rho2": _num(lp.rho2),
    }


def _unit_scale(args):
    return (1.0 / _LN2, "bits") if args.unit == "bits" else (1.0, "nats")


def cmd_codelen(args, em):
    x = load_data(args.path, args.header)
    lp = resolve_luckiness(args, x.shape[1])
    rep = lnml_report(x, lp)
    k, unit = _unit_scale(args)
    obj = {
        "record": "codelen",
        "n": rep.n,
        "m": rep.m,
        **_lp_fields(lp),
        "log_capacity": _num(k * rep.log_capacity),
        "log_density": _num(k * rep.log_density),
        "code_length": _num(k * rep.code_length_nats),
        "unit": unit,
    }
    text = "\n".join(
        [
            f"n: {rep.n}",
            f"m: {rep.m}",
            f"nu: {_fmt(lp.nu)}",
            f"mu0: {' '.join(_fmt(v) for v in lp.mu0)}",
            f"sigma0: {'; '.join(' '.join(_fmt(v) for v in row) for row in lp.sigma0)}",
            f"rho2: {_fmt(lp.rho2)}",
            f"log_capacity: {_fmt(k * rep.log_capacity)} {unit}",
            f"log_density: {_fmt(k * rep.log_density)} {unit}",
            f"code_length: {_fmt(k * rep.code_length_nats)} {unit}",
        ]
    )
    em.record(obj, text)
    return 0


def cmd_predict(args, em):
    x = load_data(args.path, args.header)
    lp = resolve_luckiness(args, x.shape[1])
    k, unit = _unit_scale(args)
    total = 0.0
    if args.format == "text":
        em.out.write("# index code_length dof location scale_logdet\n")
    for i, pred, nats in iter_predictions(x, lp):
        total += nats
        logdet = float(np.linalg.slogdet(pred.scale)[1])
        em.record(
            {
                "record": "point",
                "index": i,
                "code_length": _num(k * nats),
                "dof": _num(pred.dof),
                "location": [_num(v) for v in pred.location],
                "scale": [[_num(v) for v in row] for row in pred.scale],
                "scale_logdet": _num(logdet),
            },
            f"{i} {_fmt(k * nats)} {_fmt(pred.dof)} {','.join(_fmt(v) for v in pred.location)} {_fmt(logdet)}",
        )
    batch = -log_lnml(x, lp)
    delta = total - batch
    em.record(
        {
            "record": "total",
            "n": x.shape[0],
            "total": _num(k * total),
            "batch": _num(k * batch),
            "delta": float(f"{k * delta:.3e}"),
            "unit": unit,
        },
        f"total: {_fmt(k * total)} {unit}\nbatch: {_fmt(k * batch)} {unit}\ndelta: {k * delta:.3e} {unit}",
    )
    return 0


def cmd_changepoint(args, em):
    x = load_data(args.path, args.header)
    lp = resolve_luckiness(args, x.shape[1])
    try:
        seg = detect_multi_change(x, lp, min_seg=args.min_seg, max_splits=args.max_splits)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    k, unit = _unit_scale(args)
    edges = (0,) + seg.boundaries + (x.shape[0],)
    segments = [
        {"start": a, "stop": b, "code_length": _num(k * c)}
        for a, b, c in zip(edges[:-1], edges[1:], seg.segment_nats)
    ]
    lines = [f"boundaries: {' '.join(str(b) for b in seg.boundaries) or '(none)'}"]
    lines += [f"segment [{s['start']}, {s['stop']}): {_fmt(k * c)} {unit}" for s, c in zip(segments, seg.segment_nats)]
    lines += [f"total: {_fmt(k * seg.total_nats)} {unit}", f"baseline: {_fmt(k * seg.baseline_nats)} {unit}"]
    em.record(
        {
            "record": "changepoint",
            "n": x.shape[0],
            "m": x.shape[1],
            "boundaries": list(seg.boundaries),
            "segments": segments,
            "total": _num(k * seg.total_nats),
            "baseline": _num(k * seg.baseline_nats),
            "unit": unit,
        },
        "\n".join(lines),
    )
    return 0


def cmd_verify(args, em):
    m = args.dim
    if m < 1:
        raise UsageError("dim: must be >= 1")
    if any(n < 1 for n in args.n):
        raise UsageError("n: every size must be >= 1")
    if not any(v is not None for v in (args.nu, args.sigma0, args.rho2, args.sigma2_floor, args.radius_R)):
        lp = LuckinessParams(float(m), np.zeros(m), np.eye(m), 1.0)
    else:
        lp = resolve_luckiness(args, m)
    if args.mc_samples < 10_000:
        raise UsageError("mc-samples: must be >= 10000")
    failures = 0

    def check(name, closed, ref, ok, tol):
        nonlocal failures
        failures += not ok
        em.record(
            {"record": "check", "name": name, "closed_form": _num(closed), "oracle": _num(ref),
             "tolerance": tol, "pass": bool(ok)},
            f"{'PASS' if ok else 'FAIL'} {name}: closed={_fmt(closed)} oracle={_fmt(ref)} tol={tol}",
        )

    for n in args.n:
        log_c = log_capacity_general(m, n, lp) + args.inject_capacity_error
        if m == 1 and n <= 3:
            log_q = math.log(oracle.quad_capacity_1d(n, lp))
            check(f"capacity quad m=1 n={n} (log)", log_c, log_q, abs(log_c - log_q) <= 1e-6, "1e-6")
        est, se = oracle.mc_capacity(m, n, lp, samples=args.mc_samples, seed=args.seed)
        closed = math.exp(log_c)
        check(f"capacity mc m={m} n={n}", closed, est, abs(closed - est) <= 3 * se, f"3se={3 * se:.3g}")
    if m == 1:
        total = oracle.quad_normalization_1d(lambda x: log_lnml(x, lp), 1, lp)
        check("normalization quad m=1 n=1", 1.0, total, abs(total - 1.0) <= 1e-8, "1e-8")
    em.record(
        {"record": "summary", "failed": failures},
        f"{'all checks passed' if not failures else f'{failures} check(s) failed'}",
    )
    return 1 if failures else 0


def _add_luckiness(p):
    g = p.add_argument_group("luckiness")
    g.add_argument("--nu", type=float, help="degrees of freedom (> m-1)")
    g.add_argument("--mu0", help="location center, comma-separated (default zeros)")
    g.add_argument("--sigma0", help="scale: a scalar s (meaning s*I) or a CSV file with an m x m matrix")
    g.add_argument("--rho2", type=float, help="mean shrinkage strength (> 0)")
    g.add_argument("--sigma2-floor", type=float, dest="sigma2_floor",
                   help="default heuristic: lower bound on covariance eigenvalues")
    g.add_argument("--radius-R", type=float, dest="radius_R",
                   help="default heuristic: upper bound on the norm of the mean")


def _add_output(p):
    p.add_argument("--unit", choices=("nats", "bits"), default="nats")
    p.add_argument("--bits", dest="unit", action="store_const", const="bits", help="same as --unit bits")
    p.add_argument("--format", choices=("text", "jsonl"), default=os.environ.get(FORMAT_ENV, "text"),
                   help=f"output format (default from ${FORMAT_ENV}, else text)")


def build_parser():
    parser = argparse.ArgumentParser(prog="lnml", description="Luckiness-NML code lengths for Gaussian data")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("codelen", "batch code length"),
        ("predict", "sequential per-point code lengths"),
        ("changepoint", "MDL change-point segmentation"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("path", help="CSV file, one observation per row ('-' for stdin)")
        p.add_argument("--header", action="store_true", help="skip the first row")
        _add_luckiness(p)
        _add_output(p)
        if name == "changepoint":
            p.add_argument("--min-seg", type=int, dest="min_seg", help="minimum block length (default m+1)")
            p.add_argument("--max-splits", type=int, dest="max_splits", default=5)
    p = sub.add_parser("verify", help="compare closed forms with numerical oracles")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n", type=int, nargs="+", default=[1, 2])
    p.add_argument("--mc-samples", type=int, dest="mc_samples", default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-capacity-error", type=float, dest="inject_capacity_error", default=0.0,
                   help=argparse.SUPPRESS)
    _add_luckiness(p)
    _add_output(p)
    return parser


COMMANDS = {"codelen": cmd_codelen, "predict": cmd_predict, "changepoint": cmd_changepoint, "verify": cmd_verify}


def main(argv=None, out=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format not in ("text", "jsonl"):
        parser.error(f"format: unknown output format {args.format!r}")
    em = Emitter(args.format, out if out is not None else sys.stdout)
    try:
        return COMMANDS[args.command](args, em)
    except UsageError as exc:
        print(f"lnml: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
