"""Command-line front end.

Three subcommands drive the pipeline on a curve spec file:

  certicurve analyze <spec>       character points with one-sided frames
  certicurve approximate <spec>   certified B-spline approximation bundle
  certicurve implicitize <spec>   quadric ideal of a cubic Bezier

Exit codes are stable: 0 success, 2 input error, 3 unsupported curve,
4 pipeline failure.  CERTICURVE_THREADS caps the worker threads used
for emitting plot data.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction as F
from pathlib import Path

from . import specio
from .assembly import certify
from .characters import build_vertex_list
from .errors import CertiCurveError, ImproperCurveError, PlanarCurveError
from .implicitize import ideal_of
from .specio import SpecFormatError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNSUPPORTED = 3
EXIT_PIPELINE = 4


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="certicurve",
        description="Certified cubic rational B-spline approximation of "
                    "rational space curves.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("spec", help="curve specification file (JSON)")
        p.add_argument("--delta", type=float, default=1e-3,
                       help="error bound for the approximation (default 1e-3)")
        p.add_argument("--strategy", choices=("shoulder", "arclength"),
                       default="shoulder",
                       help="subdivision strategy (default shoulder)")
        p.add_argument("--samples", type=int, default=300, metavar="N",
                       help="error samples per piece (default 300)")
        p.add_argument("--root-width", type=str, default=None, metavar="F",
                       help="isolation width for character parameters")
        p.add_argument("--plot-dir", type=str, default=None, metavar="D",
                       help="directory for CSV error samples and polylines")
        p.add_argument("--output", type=str, default=None, metavar="F",
                       help="write the JSON bundle here instead of stdout")

    common(sub.add_parser("analyze", help="report character points"))
    common(sub.add_parser("approximate", help="run the certified pipeline"))
    imp = sub.add_parser("implicitize", help="quadric ideal of a cubic Bezier")
    common(imp)
    imp.add_argument("--verify", type=str, default=None, metavar="F",
                     help="re-check a previously written quadric bundle "
                          "against the spec instead of recomputing")
    return top


def _worker_cap() -> int:
    raw = os.environ.get("CERTICURVE_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        raise SpecFormatError(
            f"CERTICURVE_THREADS must be a positive integer, got {raw!r}")
    return cap


def _root_width(args) -> F | None:
    if args.root_width is None:
        return None
    try:
        width = F(args.root_width)
    except (ValueError, ZeroDivisionError):
        raise SpecFormatError(
            f"--root-width: {args.root_width!r} is not a rational") from None
    if width <= 0:
        raise SpecFormatError("--root-width must be positive")
    return width


def _emit(doc: dict, output: str | None):
    text = specio.dumps(doc)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    curve = specio.load_curve_spec(args.spec)
    vlist = build_vertex_list(curve, _root_width(args))
    _emit(specio.analyze_bundle(curve, vlist), args.output)
    return EXIT_OK


def cmd_approximate(args) -> int:
    if not args.delta > 0:
        raise SpecFormatError("--delta must be positive")
    if args.samples < 2:
        raise SpecFormatError("--samples must be at least 2")
    curve = specio.load_curve_spec(args.spec)
    result = certify(curve, args.delta, strategy=args.strategy,
                     m=args.samples, root_width=_root_width(args))
    doc = specio.result_bundle(curve, result, args.delta, args.strategy,
                               args.samples)
    _emit(doc, args.output)
    if args.plot_dir:
        specio.write_plot_data(args.plot_dir, curve, result,
                               workers=args.workers)
    return EXIT_OK


def cmd_implicitize(args) -> int:
    bez = specio.load_bezier_spec(args.spec)
    if args.verify:
        doc = specio.read_spec_doc(args.verify)
        quads = doc.get("quadrics")
        if not isinstance(quads, dict):
            raise SpecFormatError("field quadrics: missing in verify file",
                                  field="quadrics")
        polys = [specio.quadric_from_coefficients(quads.get(k), f"quadrics.{k}")
                 for k in ("f", "g", "h")]
        residues = specio.vanishing_residues(bez, polys)
        if any(r != 0 for r in residues):
            raise SpecFormatError(
                "verification failed: quadrics do not vanish on the curve")
        sys.stdout.write("verified: all three quadrics vanish on the curve\n")
        return EXIT_OK

    ideal = ideal_of(bez)
    residues = specio.vanishing_residues(bez, ideal.quadrics)
    if any(r != 0 for r in residues):
        raise CertiCurveError("implicitization failed the vanishing check")
    _emit(specio.implicitize_bundle(bez, ideal), args.output)
    return EXIT_OK


_COMMANDS = {
    "analyze": cmd_analyze,
    "approximate": cmd_approximate,
    "implicitize": cmd_implicitize,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        args.workers = _worker_cap()
        return _COMMANDS[args.command](args)
    except SpecFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PlanarCurveError, ImproperCurveError) as exc:
        print(f"error: unsupported curve: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except CertiCurveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
