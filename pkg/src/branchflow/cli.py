"""Command-line driver: solve, init, oracle, and render subcommands.

Exit codes: 0 on success, 2 on bad input, 3 on an internal invariant
violation (the offending network, when available, is dumped to stderr as
JSON for diagnosis).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import INITIALIZERS, REL_TOL, OptimizeConfig
from .construct import build_small, build_star, build_subdivision
from .errors import InputError, InvariantViolation
from .instances import export_network, import_network, parse_instance
from .optimize_global import global_optimize
from .oracle import enumerate_optimal
from .svg import render_svg

_BUILDERS = {
    "subdivision": build_subdivision,
    "star": build_star,
    "small": build_small,
}


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True,
                   help="instance file path, or - for stdin")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="instance format (default json)")
    p.add_argument("--alpha", type=float, default=None,
                   help="cost exponent in (0, 1]; overrides the document")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for generator specs; overrides the document")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-json", default=None, metavar="PATH",
                   help="write the network JSON here (default: stdout)")
    p.add_argument("--out-svg", default=None, metavar="PATH",
                   help="also render the network to SVG")


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _load_instance(args: argparse.Namespace):
    inst = parse_instance(_read_input(args.input), args.format,
                          alpha=args.alpha, seed=args.seed)
    args.alpha = inst.alpha  # keep for diagnostic dumps
    return inst


def _emit(net, alpha: float, args: argparse.Namespace) -> None:
    blob = export_network(net, alpha)
    if args.out_json:
        Path(args.out_json).write_bytes(blob)
    if args.out_svg:
        Path(args.out_svg).write_bytes(render_svg(net, alpha))
    if args.out_json or args.out_svg:
        print(f"cost={net.cost_m_alpha(alpha)!r} vertices={net.n_vertices()} "
              f"edges={net.n_edges()}")
    else:
        sys.stdout.buffer.write(blob)


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = _load_instance(args)
    config = OptimizeConfig(rel_tol=args.rel_tol, max_rounds=args.max_rounds,
                            subdivide_factor=args.subdivide_factor,
                            initializer=args.initializer, seed=inst.seed)
    net = global_optimize(inst.source_measure(), inst.targets, inst.alpha, config)
    _emit(net, inst.alpha, args)
    return 0


def _cmd_init(args: argparse.Namespace) -> int:
    inst = _load_instance(args)
    build = _BUILDERS[args.initializer]
    net = build(inst.source_point, inst.source_mass, inst.targets, inst.alpha)
    _emit(net, inst.alpha, args)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    inst = _load_instance(args)
    net, _cost = enumerate_optimal(inst.source_measure(), inst.targets, inst.alpha)
    _emit(net, inst.alpha, args)
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    net, alpha = import_network(_read_input(args.input))
    args.alpha = alpha
    svg = render_svg(net, alpha)
    if args.out_svg:
        Path(args.out_svg).write_bytes(svg)
    else:
        sys.stdout.buffer.write(svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchflow",
        description="Branched transport networks: solve, initialize, verify, render.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the full optimization pipeline")
    _add_instance_flags(p)
    _add_output_flags(p)
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--rel-tol", type=float, default=REL_TOL)
    p.add_argument("--subdivide-factor", type=float, default=2.0)
    p.add_argument("--initializer", choices=INITIALIZERS, default="subdivision")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("init", help="construct an initial network only")
    _add_instance_flags(p)
    _add_output_flags(p)
    p.add_argument("--initializer", choices=INITIALIZERS, default="subdivision")
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("oracle", help="brute-force optimum for N <= 4 targets")
    _add_instance_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("render", help="render a network JSON file to SVG")
    p.add_argument("--input", required=True,
                   help="network JSON path, or - for stdin")
    p.add_argument("--out-svg", default=None, metavar="PATH",
                   help="SVG output path (default: stdout)")
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        net = getattr(exc, "network", None)
        if net is not None:
            alpha = getattr(args, "alpha", None)
            try:
                sys.stderr.buffer.write(export_network(net, alpha if alpha else 1.0))
            except Exception:
                print("(diagnostic dump failed)", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
