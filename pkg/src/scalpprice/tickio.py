"""Tick file input, indicator table output and plot series extraction."""
from __future__ import annotations

import gzip
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .moments import TickRecord

NAN_TOKEN = "NaN"


class InputFormatError(ValueError):
    """A tick file line could not be parsed."""


@dataclass(frozen=True)
class ColumnSpec:
    """``TOTAL:T:P:V`` with 0-based column indices."""

    total: int
    t: int
    p: int
    v: int

    @classmethod
    def parse(cls, text: str) -> "ColumnSpec":
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"column spec {text!r} must look like TOTAL:T:P:V")
        try:
            total, t, p, v = (int(x) for x in parts)
        except ValueError:
            raise ValueError(f"column spec {text!r} must contain integers") from None
        if len({t, p, v}) != 3:
            raise ValueError(f"column spec {text!r}: T, P, V columns must be distinct")
        if min(t, p, v) < 0 or max(t, p, v) >= total:
            raise ValueError(f"column spec {text!r}: indices must lie in [0, {total})")
        return cls(total, t, p, v)


def _open_text(path, mode="rt"):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode, encoding="ascii", newline="")
    return open(path, mode, encoding="ascii", newline="")


def iter_ticks(path, cols: ColumnSpec) -> Iterator[TickRecord]:
    """Ticks in file order; ``.gz`` files are decompressed on the fly."""
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != cols.total:
                raise InputFormatError(
                    f"{path}:{lineno}: expected {cols.total} tab-separated columns, got {len(fields)}")
            try:
                t = int(fields[cols.t])
                p = float(fields[cols.p])
                v = float(fields[cols.v])
            except ValueError as exc:
                raise InputFormatError(f"{path}:{lineno}: {exc}") from None
            if not (math.isfinite(p) and math.isfinite(v)):
                raise InputFormatError(f"{path}:{lineno}: non-finite price or shares")
            yield TickRecord(t, p, v)


def read_ticks(path, cols: ColumnSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Whole file as ``(t_ns int64, price, shares)`` arrays."""
    t, p, v = [], [], []
    for tick in iter_ticks(path, cols):
        t.append(tick.t)
        p.append(tick.p)
        v.append(tick.v)
    return np.array(t, dtype=np.int64), np.array(p, dtype=float), np.array(v, dtype=float)


def format_value(x) -> str:
    """Shortest round-trip decimal; integral shares and ints print without '.0'."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return NAN_TOKEN
    return repr(x)


def _format_column(name: str, values) -> list[str]:
    arr = np.asarray(values)
    if arr.dtype.kind in "iu":
        return [str(x) for x in arr.tolist()]
    out = [NAN_TOKEN if x != x else repr(x) for x in arr.astype(float).tolist()]
    if name == "shares":
        out = [s[:-2] if s.endswith(".0") else s for s in out]
    return out


class OutputWriter:
    """Incremental TSV writer: header once, then blocks of columnar records."""

    def __init__(self, path, fields: Sequence[str]):
        self.path = Path(path)
        self.fields = tuple(fields)
        try:
            self._fh = open(self.path, "w", encoding="ascii", newline="\n")
        except OSError as exc:
            raise OSError(f"cannot write {self.path}: {exc.strerror}") from exc
        self._fh.write("\t".join(self.fields) + "\n")

    def write_block(self, columns: dict) -> None:
        cols = [_format_column(name, columns[name]) for name in self.fields]
        if not cols or not cols[0]:
            return
        self._fh.write("\n".join("\t".join(row) for row in zip(*cols)) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_output(columns: dict, path, fields: Sequence[str]) -> None:
    """Write a header plus one line per record (columns given as arrays)."""
    with OutputWriter(path, fields) as w:
        w.write_block(columns)


def read_output(path) -> dict[str, np.ndarray]:
    """Parse an indicator table back into float64 columns (T as int64)."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = [line.rstrip("\n").split("\t") for line in fh if not line.startswith("#")]
    out = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        if name in ("T", "n_eff"):
            out[name] = np.array([int(x) for x in raw], dtype=np.int64)
        else:
            out[name] = np.array([float(x) for x in raw], dtype=float)
    return out


def emit_plot_series(columns: dict, selection: Sequence[str], path,
                     shift: dict | None = None, scale: dict | None = None) -> None:
    """Narrow TSV of chosen fields; value -> value * scale + shift per field.

    The applied transforms are recorded in ``#`` comment lines above the
    header so that a chart can be mapped back to raw values.
    """
    shift = dict(shift or {})
    scale = dict(scale or {})
    unknown = [f for f in list(selection) + list(shift) + list(scale) if f not in columns]
    if unknown:
        raise KeyError(f"unknown field(s): {', '.join(unknown)}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for name in selection:
            if name in shift or name in scale:
                fh.write(f"# {name}: scale={format_value(scale.get(name, 1.0))} "
                         f"shift={format_value(shift.get(name, 0.0))}\n")
        fh.write("\t".join(selection) + "\n")
        cols = []
        for name in selection:
            col = np.asarray(columns[name])
            if name in shift or name in scale:
                col = col.astype(float) * float(scale.get(name, 1.0)) + float(shift.get(name, 0.0))
            cols.append(_format_column(name, col))
        if cols and cols[0]:
            fh.write("\n".join("\t".join(row) for row in zip(*cols)) + "\n")
