"""Command-line interface: snap, draw, check, gen-reduction.

Exit codes: 0 success, 1 unreadable input or bad usage, 2 infeasible,
3 node/iteration budget exhausted, 4 invalid reduction layout, 5 check found
violations.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .core import Drawing, GridBox, GridSnapError, Instance, Objective, ObjectiveKind, to_rational
from .files import (InstanceFile, ParseError, dumps, instance_to_doc, read_instance, read_positions,
                    solution_to_doc)
from .model import UnsupportedObjective
from .reduce import LayoutInvalid, compile as compile_formula, parse_formula
from .solve import SolveConfig, Status, snap_full, snap_lazy
from .topology import check

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_LAYOUT = 4
EXIT_UNSAFE = 5

log = logging.getLogger("gridsnap")


class _Parser(argparse.ArgumentParser):
    # usage errors share the parse-error code; argparse's default 2 means "infeasible" here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


class _InputError(Exception):
    pass


def _emit(doc, path: Optional[str]) -> None:
    text = dumps(doc)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(path) -> InstanceFile:
    try:
        return read_instance(path)
    except (OSError, ParseError, GridSnapError, ValueError) as exc:
        raise _InputError(f"cannot read instance {path}: {exc}") from None


def _config(args) -> SolveConfig:
    cfg = SolveConfig()
    if args.budget is not None:
        cfg.node_budget = args.budget
    if args.max_iterations is not None:
        cfg.max_iterations = args.max_iterations
    if args.time_limit is not None:
        cfg.time_limit = args.time_limit
    if getattr(args, "cost_cap", None) is not None:
        try:
            cfg.cost_cap = to_rational(args.cost_cap)
        except (ValueError, ZeroDivisionError):
            raise _InputError(f"bad --cost-cap {args.cost_cap!r}") from None
    return cfg


def _solve(instance: Instance, args):
    cfg = _config(args)
    fn = snap_full if args.strategy == "full" else snap_lazy
    return fn(instance, cfg)


def _finish(res, instance: Instance, args, extra=None) -> int:
    doc = solution_to_doc(res, instance.objective, args.strategy)
    if getattr(args, "cost_cap", None) is not None:
        doc["cost_cap"] = args.cost_cap
    if extra:
        doc.update(extra)
    if args.export_lp:
        if res.model is None:
            raise _InputError("no model to export")
        try:
            Path(args.export_lp).write_text(res.model.to_lp(), encoding="utf-8")
        except UnsupportedObjective as exc:
            raise _InputError(f"cannot export LP: {exc}") from None
    _emit(doc, args.json_out)
    if args.svg and res.solution is not None:
        from .plotting import render_svg

        render_svg(instance.drawing, res.solution.positions, args.svg,
                   title=f"{instance.objective.kind.value} = {doc.get('cost')}")
    if res.status is Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if res.status is not Status.OPTIMAL:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_snap(args) -> int:
    inst_file = _load(args.input)
    instance = inst_file.instance
    if args.objective:
        try:
            instance = Instance(instance.drawing, Objective.parse(args.objective))
        except ValueError as exc:
            raise _InputError(str(exc)) from None
    return _finish(_solve(instance, args), instance, args)


def rescale(drawing: Drawing, box: GridBox) -> Drawing:
    """Map the drawing affinely onto ``box``; positive axis scaling keeps every orientation."""
    src = drawing.box
    sx = Fraction(box.x_max, src.x_max) if src.x_max else Fraction(0)
    sy = Fraction(box.y_max, src.y_max) if src.y_max else Fraction(0)
    verts = [(v, (x * sx, y * sy)) for v, (x, y) in drawing.positions.items()]
    return Drawing(verts, drawing.edges, box)


def cmd_draw(args) -> int:
    inst_file = _load(args.input)
    d = inst_file.drawing
    if args.width < 1:
        raise _InputError("--width must be at least 1")
    height = args.max_height if args.max_height is not None else max(1, len(d.positions) - 1)
    if height < 1:
        raise _InputError("--max-height must be at least 1")
    try:
        ref = rescale(d, GridBox(args.width, height))
    except GridSnapError as exc:
        raise _InputError(f"cannot rescale drawing: {exc}") from None
    instance = Instance(ref, Objective(ObjectiveKind.MIN_HEIGHT))
    res = _solve(instance, args)
    extra = {"width": args.width, "max_height": height}
    return _finish(res, instance, args, extra)


def cmd_check(args) -> int:
    inst_file = _load(args.input)
    try:
        positions = read_positions(args.positions)
        viols = check(inst_file.drawing, positions)
    except (OSError, ParseError, GridSnapError) as exc:
        raise _InputError(f"cannot check {args.positions}: {exc}") from None
    for v in viols:
        sys.stdout.write(json.dumps(v.to_json(), sort_keys=True) + "\n")
    return EXIT_UNSAFE if viols else EXIT_OK


def cmd_gen_reduction(args) -> int:
    try:
        formula = parse_formula(Path(args.formula).read_text(encoding="utf-8"))
    except (OSError, ValueError, GridSnapError) as exc:
        raise _InputError(f"cannot read formula {args.formula}: {exc}") from None
    gadget = compile_formula(formula)
    doc = instance_to_doc(InstanceFile(Instance(gadget.drawing)))
    out = Path(args.out)
    out.write_text(dumps(doc), encoding="utf-8")
    sidecar = Path(args.sidecar) if args.sidecar else out.with_name(out.stem + ".sidecar.json")
    side = {
        "c_min": str(gadget.c_min),
        "white_vertex_ids": sorted(gadget.white_vertices),
        "assignment_vertices": {str(k): v for k, v in gadget.assignment_vertices.items()},
        "satisfaction_vertices": {str(k): v for k, v in gadget.satisfaction_vertices.items()},
    }
    sidecar.write_text(dumps(side), encoding="utf-8")
    if args.svg:
        from .plotting import render_svg

        render_svg(gadget.drawing, None, args.svg)
    return EXIT_OK


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=("full", "lazy"), default="lazy",
                   help="full model up front, or lazy row generation (default)")
    p.add_argument("--budget", type=int, help="branch-and-bound node budget per solve")
    p.add_argument("--max-iterations", type=int, help="lazy-loop iteration cap")
    p.add_argument("--time-limit", type=float, help="seconds per solve (makes results timing-dependent)")
    p.add_argument("--export-lp", metavar="PATH", help="write the final model in CPLEX LP format")
    p.add_argument("--svg", metavar="PATH", help="render input, output and moves to an SVG file")
    p.add_argument("--json-out", metavar="PATH", help="write the solution JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridsnap", description="Topologically safe snapping to the integer grid.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("snap", help="round a drawing to grid points at minimum cost")
    p.add_argument("input")
    p.add_argument("--objective", help="override the file's objective (e.g. L1Sum, MaxMoveL2)")
    p.add_argument("--cost-cap", help="only search for solutions of at most this cost")
    _solver_flags(p)
    p.set_defaults(func=cmd_snap)

    p = sub.add_parser("draw", help="min-height grid drawing with the input's embedding")
    p.add_argument("input")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--max-height", type=int, help="height of the search box (default: |V| - 1)")
    _solver_flags(p)
    p.set_defaults(func=cmd_draw)

    p = sub.add_parser("check", help="list topology violations of a placement")
    p.add_argument("input")
    p.add_argument("positions", help="solution JSON or an object of id -> [x, y]")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen-reduction", help="compile a monotone planar 3-SAT formula (DIMACS)")
    p.add_argument("formula")
    p.add_argument("--out", required=True, help="instance JSON to write")
    p.add_argument("--sidecar", help="c_min and white ids (default: <out>.sidecar.json)")
    p.add_argument("--svg", metavar="PATH", help="render the gadget drawing")
    p.set_defaults(func=cmd_gen_reduction)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"gridsnap: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except LayoutInvalid as exc:
        print(f"gridsnap: invalid layout: {exc}", file=sys.stderr)
        return EXIT_LAYOUT


if __name__ == "__main__":
    sys.exit(main())
