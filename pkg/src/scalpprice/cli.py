"""Command line drivers: the indicator table and plot series extraction.

Exit codes: 0 success, 1 usage error, 2 input format error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .basis import BasisKind, MeasureConfig
from .moments import TimeOrderError
from .operators import GramIndefiniteError
from .pipeline import FIELDS, StreamEngine, StreamSettings
from .scalp import FlKind, FlVariant, ZKind
from .tickio import ColumnSpec, InputFormatError, OutputWriter, emit_plot_series, iter_ticks, read_output

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="scalpprice", allow_abbrev=False,
                 description="Per-tick execution-flow indicators and scalp price for a tick file.")
    ap.add_argument("--musein_file", required=True, help="input TSV of ticks (.gz accepted)")
    ap.add_argument("--musein_cols", default="3:0:1:2",
                    help="TOTAL:T:P:V, 0-based columns of time (ns), price and shares")
    ap.add_argument("--museout_file", required=True, help="output TSV path")
    ap.add_argument("--n", type=int, default=12, help="basis dimension (2..24)")
    ap.add_argument("--tau", type=float, default=128.0, help="decay time in seconds")
    ap.add_argument("--measure", default="ShiftedLegendre",
                    help="basis: ShiftedLegendre, Laguerre or Monomials "
                         "(ScalpedMaxIProjection* spellings accepted)")
    ap.add_argument("--dp_to_use", default=FlKind.PROBCORR_2D_SCALP.value,
                    help="directional attribute: " + ", ".join(k.value for k in FlKind))
    ap.add_argument("--z", default=None,
                    help="rate option for 2D or non-local attributes: "
                         + ", ".join(z.value for z in ZKind))
    ap.add_argument("--chunk", type=int, default=4096, help=argparse.SUPPRESS)
    return ap


def settings_from_args(args) -> tuple[StreamSettings, ColumnSpec]:
    try:
        cols = ColumnSpec.parse(args.musein_cols)
        measure = MeasureConfig(BasisKind.parse(args.measure), args.n, args.tau)
        variant = FlVariant(FlKind.parse(args.dp_to_use), args.z)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.chunk < 1:
        raise UsageError("--chunk must be positive")
    return StreamSettings(measure, variant), cols


def run(settings: StreamSettings, cols: ColumnSpec, src, dst, chunk: int = 4096) -> int:
    """Stream ``src`` through the engine into ``dst``; returns the record count."""
    engine = StreamEngine(settings, chunk)
    count = 0
    with OutputWriter(dst, FIELDS) as out:
        buf_t, buf_p, buf_v = [], [], []

        def flush():
            block = engine.process_block(np.array(buf_t, dtype=np.int64), np.array(buf_p),
                                  np.array(buf_v))
            out.write_block(block)
            buf_t.clear()
            buf_p.clear()
            buf_v.clear()

        for tick in iter_ticks(src, cols):
            buf_t.append(tick.t)
            buf_p.append(tick.p)
            buf_v.append(tick.v)
            count += 1
            if len(buf_t) >= chunk:
                flush()
        if buf_t:
            flush()
    return count


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings, cols = settings_from_args(args)
    except UsageError as exc:
        sys.stderr.write(f"scalpprice: error: {exc}\n")
        return EXIT_USAGE
    try:
        run(settings, cols, args.musein_file, args.museout_file, args.chunk)
    except (InputFormatError, TimeOrderError, UnicodeDecodeError, EOFError, OSError) as exc:
        # OSError covers missing files and corrupt gzip streams
        sys.stderr.write(f"scalpprice: input error: {exc}\n")
        return EXIT_INPUT
    except (GramIndefiniteError, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"scalpprice: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    return EXIT_OK


def _key_values(items, what) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.rpartition("=")
        if not sep:
            raise UsageError(f"{what} expects FIELD=VALUE, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"{what} value for {name} is not a number") from None
    return out


def plot_main(argv=None) -> int:
    ap = _Parser(prog="scalpprice-plot", allow_abbrev=False,
                 description="Extract selected columns of an indicator table for charting.")
    ap.add_argument("--input", required=True, help="indicator table written by scalpprice")
    ap.add_argument("--output", required=True, help="narrow TSV to write")
    ap.add_argument("--fields", required=True, help="comma-separated field names, e.g. T,P_last")
    ap.add_argument("--shift", action="append", metavar="FIELD=VALUE")
    ap.add_argument("--scale", action="append", metavar="FIELD=VALUE")
    args = ap.parse_args(argv)
    try:
        shift = _key_values(args.shift, "--shift")
        scale = _key_values(args.scale, "--scale")
    except UsageError as exc:
        sys.stderr.write(f"scalpprice-plot: error: {exc}\n")
        return EXIT_USAGE
    try:
        columns = read_output(args.input)
    except (OSError, ValueError, IndexError) as exc:
        sys.stderr.write(f"scalpprice-plot: input error: {exc}\n")
        return EXIT_INPUT
    try:
        emit_plot_series(columns, [f for f in args.fields.split(",") if f], args.output,
                         shift, scale)
    except KeyError as exc:
        sys.stderr.write(f"scalpprice-plot: error: {exc.args[0]}\n")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
