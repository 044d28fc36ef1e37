"""CSV result tables and companion gnuplot scripts."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, TextIO

from .errors import ConfigError
from .experiments import Row

__all__ = ["HEADER", "FIT_HEADER", "format_value", "write_rows", "read_rows", "write_fit_table",
           "gnuplot_script"]

HEADER = ("experiment", "model", "d", "l0", "l1", "p", "t", "metric", "value")
FIT_HEADER = ("model", "d", "l0", "l1", "p", "b", "tau", "alpha", "sse", "converged")


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def _meta_line(meta: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"


def _write(fh: TextIO, header, rows: Iterable, meta: dict | None) -> None:
    if meta:
        fh.write(_meta_line(meta))
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])


def write_rows(rows: Iterable[Row], dest, meta: dict | None = None) -> None:
    """Write long-format rows; ``dest`` is a path or an open text stream."""
    if hasattr(dest, "write"):
        _write(dest, HEADER, rows, meta)
        return
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        _write(fh, HEADER, rows, meta)


def _parse_opt_int(s: str):
    return int(s) if s != "" else None


def read_rows(path) -> list[Row]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None or tuple(header) != HEADER:
            raise ConfigError(f"{path}: expected header {','.join(HEADER)}")
        for n, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                rows.append(Row(rec[0], rec[1], int(rec[2]), _parse_opt_int(rec[3]),
                                _parse_opt_int(rec[4]), float(rec[5]), _parse_opt_int(rec[6]),
                                rec[7], float(rec[8])))
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}: bad row {n}: {exc}") from None
    return rows


def write_fit_table(fits: Iterable[tuple], dest, meta: dict | None = None) -> None:
    if hasattr(dest, "write"):
        _write(dest, FIT_HEADER, fits, meta)
        return
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        _write(fh, FIT_HEADER, fits, meta)


def gnuplot_script(csv_path, rows: list[Row]) -> str:
    """Plot every (model, d, l0, l1, p) curve of each metric as a separate line.

    Rows are filtered inside gnuplot with column tests, so the script
    needs nothing beyond the CSV itself.
    """
    csv_name = Path(csv_path).name
    family = rows[0].experiment if rows else "experiment"
    x_col, x_label = (6, "p") if family == "qec_compare" else (7, "t")
    groups: dict[str, list[tuple]] = {}
    for r in rows:
        if r.metric.startswith("error") or (r.t is None and family != "qec_compare"):
            continue
        key = (r.model, r.d, r.l0, r.l1) if family != "qec_compare" else (r.model, r.d, r.t)
        groups.setdefault(r.metric, [])
        if key not in groups[r.metric]:
            groups[r.metric].append(key)

    out = [
        f"# gnuplot script for {csv_name}",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set xlabel '{x_label}'",
        "set key outside right",
        "set terminal pngcairo size 1000,700",
    ]
    if family == "qec_compare":
        out.append("set logscale x")
    stem = Path(csv_path).stem
    for metric, keys in groups.items():
        out.append(f"set output '{stem}_{metric}.png'")
        out.append(f"set ylabel '{metric}'")
        clauses = []
        for key in keys:
            if family == "qec_compare":
                model, d, tau = key
                cond = f'strcol(2) eq "{model}" && $3=={d} && $7=={tau} && strcol(8) eq "{metric}"'
                title = f"{model} d={d} tau={tau}"
            else:
                model, d, l0, l1 = key
                cond = (f'strcol(2) eq "{model}" && $3=={d} && $4=={l0} && $5=={l1}'
                        f' && strcol(8) eq "{metric}"')
                title = f"{model} d={d} ({l0},{l1})"
            style = "linespoints" if family == "qec_compare" else "lines"
            clauses.append(f"'{csv_name}' using {x_col}:(({cond}) ? $9 : 1/0) with {style} title '{title}'")
        if clauses:
            out.append("plot " + ", \\\n     ".join(clauses))
    return "\n".join(out) + "\n"
