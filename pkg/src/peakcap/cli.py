"""Command-line interface: ``peakcap <command> [flags]``.

Exit status is 0 on success, 1 when an input or a candidate distribution is
rejected (including a failed KKT check), and 2 when a numerical method does
not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .channel import EllipseConstraint, reduce_channel
from .curves import trace_curve, waterfilling_split
from .errors import ConvergenceError, EvaluationError, PeakcapError
from .inputs import SymmetricBoundaryDistribution, expand_symmetric
from .kkt import DEFAULT_GRID, DEFAULT_TOL, kkt_report
from .montecarlo import mc_mutual_information
from .solver import SolverOptions, solve_capacity

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2
_NAT_KEYS = {"capacity", "capacity_estimate", "max_violation", "max_equalization_residual", "constant_a", "value", "stderr"}


def _finite(text):
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return v


def _to_bits(obj):
    """Rescale information quantities (nats) by 1/log 2, recursively."""
    if isinstance(obj, dict):
        return {k: (v / math.log(2.0) if k in _NAT_KEYS and isinstance(v, float) else _to_bits(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_to_bits(v) for v in obj]
    return obj


def _emit_json(obj, path, bits):
    if bits:
        obj = dict(_to_bits(obj), units="bits")
    else:
        obj = dict(obj, units="nats")
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _expanded_csv(d):
    lines = ["x1,x2,mass"]
    for a in expand_symmetric(d):
        lines.append(f"{a.point[0]:.12g},{a.point[1]:.12g},{a.mass:.12g}")
    return "\n".join(lines) + "\n"


def _load_distribution(path):
    with open(path) as fh:
        data = json.load(fh)
    # accept a bare distribution or a capacity result document
    if "distribution" in data and "atoms" not in data:
        data = data["distribution"]
    return SymmetricBoundaryDistribution.from_dict(data)


def cmd_reduce(args):
    a, b, c, d = args.h
    e = reduce_channel(np.array([[a, b], [c, d]]))
    print(f"r_p={e.r_p:.12g} r_m={e.r_m:.12g}")
    return EXIT_OK


def cmd_capacity(args):
    opts = SolverOptions(
        grid_n=args.grid,
        kkt_tol=args.tol,
        allow_large_peak=args.allow_large_peak,
    )
    c = EllipseConstraint(args.rp, args.rm)
    try:
        res = solve_capacity(c, opts)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    _emit_json(res.to_dict(), args.json, args.bits)
    csv = _expanded_csv(res.distribution)
    if args.csv:
        with open(args.csv, "w", newline="\n") as fh:
            fh.write(csv)
    elif args.json:
        with open(os.path.splitext(args.json)[0] + ".csv", "w", newline="\n") as fh:
            fh.write(csv)
    return EXIT_OK


def cmd_kkt_check(args):
    d = _load_distribution(args.dist)
    rep = kkt_report(d, grid_n=args.grid, tol=args.tol)
    _emit_json(rep.to_dict(), args.json, args.bits)
    return EXIT_OK if rep.passed else EXIT_INVALID


def _write_curve(curve, path):
    text = curve.to_csv(path)
    if not path:
        sys.stdout.write(text)


def cmd_boundary(args):
    curve = trace_curve(args.kind, args.rp_min, args.rp_max, args.n)
    _write_curve(curve, args.csv)
    return EXIT_OK


def cmd_waterfilling(args):
    if args.rm is not None:
        s = waterfilling_split(args.rp if args.rp is not None else 1.0, args.rm)
        _emit_json({"p1": s.p1, "p2": s.p2, "nu": s.nu}, args.json, False)
        return EXIT_OK
    curve = trace_curve("waterfilling", args.rp_min, args.rp_max, args.n)
    _write_curve(curve, args.csv)
    return EXIT_OK


def cmd_mc_verify(args):
    d = _load_distribution(args.dist)
    est = mc_mutual_information(d, samples=args.samples, seed=args.seed)
    _emit_json(est.to_dict(), args.json, args.bits)
    return EXIT_OK


def cmd_figure1(args):
    os.makedirs(args.out, exist_ok=True)
    blue = trace_curve("two_point_boundary", 0.001, 1.2011224, args.n)
    magenta = trace_curve("waterfilling_boundary", 0.01, math.sqrt(2.0), args.n_waterfilling)
    blue.to_csv(os.path.join(args.out, "two_point_boundary.csv"))
    magenta.to_csv(os.path.join(args.out, "waterfilling_boundary.csv"))
    with open(os.path.join(args.out, "diagonal.csv"), "w", newline="\n") as fh:
        fh.write("r_p,r_m\n0,0\n1.41421356237,1.41421356237\n")
    print(args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="peakcap", description="Capacity of the 2x2 peak-power Gaussian MIMO channel.")
    p.add_argument("--bits", action="store_true", help="report information in bits instead of nats")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("reduce", help="reduce a 2x2 channel matrix to ellipse radii")
    s.add_argument("--h", nargs=4, type=_finite, required=True, metavar=("A", "B", "C", "D"), help="matrix [[A, B], [C, D]]")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("capacity", help="solve for capacity and an optimal input")
    s.add_argument("--rp", type=_finite, required=True)
    s.add_argument("--rm", type=_finite, required=True)
    s.add_argument("--grid", type=int, default=SolverOptions.grid_n)
    s.add_argument("--tol", type=_finite, default=DEFAULT_TOL, help="KKT tolerance, nats")
    s.add_argument("--json", help="result JSON path (default: stdout)")
    s.add_argument("--csv", help="expanded atoms CSV path (default: next to --json)")
    s.add_argument("--allow-large-peak", action="store_true", help="solve on the boundary even when r_p > sqrt(2)")
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("kkt-check", help="check a distribution JSON against the KKT conditions")
    s.add_argument("--dist", required=True)
    s.add_argument("--grid", type=int, default=DEFAULT_GRID)
    s.add_argument("--tol", type=_finite, default=DEFAULT_TOL)
    s.add_argument("--json")
    s.set_defaults(func=cmd_kkt_check)

    s = sub.add_parser("boundary", help="trace a regime boundary to CSV")
    s.add_argument("--kind", choices=["two-point", "waterfilling"], required=True)
    s.add_argument("--rp-min", type=_finite, required=True)
    s.add_argument("--rp-max", type=_finite, required=True)
    s.add_argument("--n", type=int, default=51)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_boundary)

    s = sub.add_parser("waterfilling", help="waterfilling split, or its boundary curve")
    s.add_argument("--rp", type=_finite)
    s.add_argument("--rm", type=_finite)
    s.add_argument("--rp-min", type=_finite, default=0.01)
    s.add_argument("--rp-max", type=_finite, default=math.sqrt(2.0))
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--csv")
    s.add_argument("--json")
    s.set_defaults(func=cmd_waterfilling)

    s = sub.add_parser("mc-verify", help="Monte Carlo mutual information of a distribution JSON")
    s.add_argument("--dist", required=True)
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json")
    s.set_defaults(func=cmd_mc_verify)

    s = sub.add_parser("figure1", help="write both regime curves and the diagonal as CSVs")
    s.add_argument("--n", type=int, default=51, help="two-point samples")
    s.add_argument("--n-waterfilling", type=int, default=100)
    s.add_argument("--out", default="figure1")
    s.set_defaults(func=cmd_figure1)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (PeakcapError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
