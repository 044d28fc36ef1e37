"""
Command-line front end.

Settings are resolved in three layers: built-in defaults, then the JSON
file given by ``--config``, then explicit flags. A flag always wins.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections import OrderedDict
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .errors import ConfigError, NumericalError, QuditLabError
from .experiments import ExperimentSpec, Row, run
from .kohlrausch import fit
from .metrics import FidelitySeries
from .selfcheck import run_checks
from .tables import gnuplot_script, read_rows, write_fit_table, write_rows

log = logging.getLogger("quditlab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_FIDELITY_FAMILIES = {
    "vs_d": "fidelity_vs_d",
    "vs_l1": "fidelity_vs_l1",
    "shifted_pair": "fidelity_shifted_pair",
}

# subcommand -> families a config file may name
_ALLOWED = {
    "fidelity": set(_FIDELITY_FAMILIES.values()),
    "entropy": {"entropy_vs_d"},
    "fit": {"kohlrausch_table"},
    "qec": {"qec_compare"},
}

_DEFAULT_FAMILY = {
    "fidelity": "fidelity_vs_d",
    "entropy": "entropy_vs_d",
    "fit": "kohlrausch_table",
    "qec": "qec_compare",
}

# argparse dest -> ExperimentSpec field
_FLAG_FIELDS = {
    "model": "model",
    "d": "d_values",
    "p": "p",
    "steps": "steps",
    "levels": "levels",
    "l1": "l1_values",
    "distance": "distance",
    "initial_state": "initial_state",
    "normalized": "normalized_entropy",
    "window": "fit_window",
    "taus": "taus",
    "p_grid": "p_grid",
    "mode": "qec_mode",
    "trajectories": "trajectories",
    "rounds": "rounds",
    "seed": "seed",
    "out": "output",
}


def _common(sub: argparse.ArgumentParser, *, model: bool = True) -> None:
    S = argparse.SUPPRESS
    sub.add_argument("--config", metavar="JSON", help="experiment config file; flags override it")
    sub.add_argument("--out", default=S, metavar="CSV", help="output path (default: stdout)")
    sub.add_argument("--plot", action="store_true", help="also write a gnuplot script next to --out")
    sub.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    sub.add_argument("--seed", type=int, default=S, help="trajectory seed (default 42)")
    if model:
        sub.add_argument("--model", default=S, help="z, xprime or xprime+z")
        sub.add_argument("--d", type=int, nargs="+", default=S, metavar="D", help="qudit dimensions")
        sub.add_argument("--p", type=float, default=S, help="error probability per step")
        sub.add_argument("--steps", type=int, default=S, help="number of time steps")
        sub.add_argument("--levels", type=int, nargs=2, default=S, metavar=("L0", "L1"),
                         help="logical levels")
        sub.add_argument("--initial-state", dest="initial_state", default=S,
                         choices=["logical_bell", "full_entangled"])


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = argparse.ArgumentParser(prog="quditlab", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    subs = ap.add_subparsers(dest="command", required=True)

    f = subs.add_parser("fidelity", help="encoded process fidelity curves")
    _common(f)
    f.add_argument("--family", choices=sorted(_FIDELITY_FAMILIES), default=S)
    f.add_argument("--l1", type=int, nargs="+", default=S, help="upper logical levels (vs_l1)")
    f.add_argument("--distance", type=int, default=S, help="level separation (shifted_pair)")

    e = subs.add_parser("entropy", help="entropy production in and out of the encoding subspace")
    _common(e)
    e.add_argument("--normalized", action="store_true", default=S,
                   help="renormalize projected states before taking entropies")

    k = subs.add_parser("fit", help="Kohlrausch lifetime table")
    _common(k)
    k.add_argument("--in", dest="infile", metavar="CSV",
                   help="fit encoded_fidelity curves from an existing CSV instead of simulating")
    k.add_argument("--window", type=float, default=S, help="fit only t <= WINDOW")

    q = subs.add_parser("qec", help="repetition-code QEC versus no correction")
    _common(q)
    q.add_argument("--taus", type=int, nargs="+", default=S, help="error steps per round")
    q.add_argument("--p-grid", dest="p_grid", type=float, nargs="+", default=S)
    q.add_argument("--mode", choices=["dense", "trajectory"], default=S)
    q.add_argument("--trajectories", type=int, default=S)
    q.add_argument("--rounds", type=int, default=S)

    subs.add_parser("validate", help="run the analytic self-checks")
    return ap


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """Merge defaults, config file and flags into a validated spec."""
    source = args.config or "<flags>"
    merged = _load_config(args.config) if args.config else {}
    allowed = _ALLOWED[args.command]
    if "family" in merged and merged["family"] not in allowed:
        raise ConfigError(f"{source}: family: {merged['family']!r} does not belong to "
                          f"'{args.command}' (expected one of {sorted(allowed)})")
    for dest, key in _FLAG_FIELDS.items():
        if hasattr(args, dest):
            merged[key] = getattr(args, dest)
    if args.command == "fidelity" and hasattr(args, "family"):
        merged["family"] = _FIDELITY_FAMILIES[args.family]
    merged.setdefault("family", _DEFAULT_FAMILY[args.command])
    try:
        return ExperimentSpec(**merged)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"]) or "<root>"
            msgs.append(f"{source}: {loc}: {err['msg']}")
        raise ConfigError("\n".join(msgs)) from None


def _meta(spec: ExperimentSpec) -> dict:
    meta = OrderedDict(quditlab=__version__, family=spec.family, model=spec.model, seed=spec.seed)
    if spec.family == "qec_compare":
        meta.update(mode=spec.qec_mode, rounds=spec.rounds)
        if spec.qec_mode == "trajectory":
            meta["trajectories"] = spec.trajectories
    else:
        meta.update(p=spec.p, steps=spec.n_steps)
    return meta


def _emit_rows(rows: list[Row], spec: ExperimentSpec, plot: bool) -> None:
    if spec.output is None:
        write_rows(rows, sys.stdout, _meta(spec))
        return
    write_rows(rows, spec.output, _meta(spec))
    if plot:
        gp = Path(spec.output).with_suffix(".gp")
        gp.write_text(gnuplot_script(spec.output, rows), encoding="utf-8")
        log.info("wrote %s", gp)


def _failed(rows: list[Row]) -> list[Row]:
    return [r for r in rows if r.metric.startswith("error:")]


def _fit_rows_from_table(rows: list[Row]) -> list[tuple]:
    by_cell: dict[tuple, dict[str, float]] = OrderedDict()
    for r in rows:
        if r.t is None and not r.metric.startswith("error:"):
            by_cell.setdefault((r.model, r.d, r.l0, r.l1, r.p), {})[r.metric] = r.value
    return [key + (m["b"], m["tau"], m["alpha"], m["sse"], bool(m["converged"]))
            for key, m in by_cell.items()]


def _fit_rows_from_curves(rows: list[Row], window: float | None) -> list[tuple]:
    curves: dict[tuple, list[tuple[int, float]]] = OrderedDict()
    for r in rows:
        if r.metric == "encoded_fidelity" and r.t is not None:
            curves.setdefault((r.model, r.d, r.l0, r.l1, r.p), []).append((r.t, r.value))
    if not curves:
        raise ConfigError("input has no encoded_fidelity rows")
    out = []
    for key, pts in curves.items():
        pts.sort()
        t = np.array([x for x, _ in pts], dtype=float)
        y = np.array([v for _, v in pts], dtype=float)
        f = fit(FidelitySeries(t, y), window=window)
        out.append(key + (f.b, f.tau, f.alpha, f.sse, f.converged))
    return out


def _pretty(fits: list[tuple]) -> str:
    lines = [f"{'model':<9}{'d':>3}{'l0':>4}{'l1':>4}{'b':>10}{'tau':>12}{'alpha':>9}"]
    for model, d, l0, l1, _p, b, tau, alpha, *_ in fits:
        lines.append(f"{model:<9}{d:>3}{l0:>4}{l1:>4}{b:>10.4f}{tau:>12.3f}{alpha:>9.4f}")
    return "\n".join(lines)


def _cmd_fit(args: argparse.Namespace) -> int:
    if args.infile:
        window = getattr(args, "window", None)
        fits = _fit_rows_from_curves(read_rows(args.infile), window)
        meta = OrderedDict(quditlab=__version__, source=Path(args.infile).name)
        out = getattr(args, "out", None)
        status = EXIT_OK
    else:
        spec = resolve_spec(args)
        rows = run(spec, jobs=args.jobs)
        fits = _fit_rows_from_table(rows)
        meta, out = _meta(spec), spec.output
        status = EXIT_NUMERIC if _failed(rows) else EXIT_OK
        for r in _failed(rows):
            print(f"error: d={r.d} levels=({r.l0},{r.l1}): {r.metric[6:]}", file=sys.stderr)
    if out is None:
        write_fit_table(fits, sys.stdout, meta)
    else:
        write_fit_table(fits, out, meta)
        print(_pretty(fits))
    if any(not math.isfinite(f[6]) for f in fits):
        status = EXIT_NUMERIC
    return status


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = resolve_spec(args)
    if args.plot and spec.output is None:
        raise ConfigError("--plot needs --out")
    rows = run(spec, jobs=args.jobs)
    _emit_rows(rows, spec, args.plot)
    failed = _failed(rows)
    for r in failed:
        print(f"error: d={r.d} p={r.p} levels=({r.l0},{r.l1}): {r.metric[6:]}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def _cmd_validate(_args: argparse.Namespace) -> int:
    ok = True
    for name, problem in run_checks():
        if problem is None:
            print(f"PASS  {name}")
        else:
            ok = False
            print(f"FAIL  {name}: {problem}")
    return EXIT_OK if ok else EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2 already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"fit": _cmd_fit, "validate": _cmd_validate}.get(args.command, _cmd_sweep)
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, QuditLabError, MemoryError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
