"""
Experiment families as declarative sweeps.

Every family expands into independent cells (one per qudit dimension,
level pair, or error probability). Cells run on a bounded process pool and
their rows are merged in sweep order, so output does not depend on
scheduling. A cell that raises records an ``error:<Type>`` row and the
sweep carries on.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Literal, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import qec
from .channels import DEFAULT_P, ErrorModel, evolve
from .errors import ConfigError, QuditLabError
from .kohlrausch import fit
from .metrics import FidelitySeries, encoded_process_fidelity, entropy_productions, fidelity
from .operators import LogicalLevels, encoding_projectors, full_entangled, logical_bell

log = logging.getLogger(__name__)

__all__ = [
    "FAMILIES",
    "ExperimentSpec",
    "Row",
    "fidelity_curve",
    "entropy_curve",
    "run",
]

FAMILIES = (
    "fidelity_vs_d",
    "fidelity_vs_l1",
    "fidelity_shifted_pair",
    "entropy_vs_d",
    "kohlrausch_table",
    "qec_compare",
)

_DEFAULT_STEPS = {"kohlrausch_table": 3600, "entropy_vs_d": 1000}
_FIDELITY_STEPS = 1000


class Row(NamedTuple):
    experiment: str
    model: str
    d: int
    l0: Optional[int]
    l1: Optional[int]
    p: float
    t: Optional[int]
    metric: str
    value: float


class ExperimentSpec(BaseModel):
    """One sweep; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal[FAMILIES]  # type: ignore[valid-type]
    model: str = "xprime"
    d_values: list[int] = Field(default_factory=lambda: [2, 3, 4, 5, 6])
    p: float = Field(DEFAULT_P, ge=0.0, le=1.0)
    steps: Optional[int] = Field(None, ge=1)
    levels: Optional[tuple[int, int]] = None
    l1_values: Optional[list[int]] = None
    distance: int = Field(1, ge=1)
    initial_state: Literal["logical_bell", "full_entangled"] = "logical_bell"
    normalized_entropy: bool = False
    fit_window: Optional[float] = Field(None, gt=0)
    taus: list[int] = Field(default_factory=lambda: [1, 10, 100])
    p_grid: Optional[list[float]] = None
    qec_mode: Literal["dense", "trajectory"] = "dense"
    trajectories: int = Field(10_000, ge=2)
    rounds: int = Field(1, ge=1)
    seed: int = 42
    output: Optional[str] = None

    @field_validator("model")
    @classmethod
    def _model(cls, v: str) -> str:
        return ErrorModel.parse(v).value

    @field_validator("d_values")
    @classmethod
    def _dims(cls, v: list[int]) -> list[int]:
        if not v or any(d < 2 for d in v):
            raise ValueError("d_values must be non-empty and every d >= 2")
        return v

    @field_validator("taus")
    @classmethod
    def _taus(cls, v: list[int]) -> list[int]:
        if not v or any(t < 0 for t in v):
            raise ValueError("taus must be non-empty and non-negative")
        return v

    @field_validator("p_grid")
    @classmethod
    def _grid(cls, v):
        if v is not None and (not v or any(not 0.0 <= p <= 1.0 for p in v)):
            raise ValueError("p_grid entries must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def _levels_fit(self):
        if self.levels is not None:
            for d in self.d_values:
                LogicalLevels(*self.levels).validate(d)
        if self.l1_values is not None:
            for d in self.d_values:
                for l1 in self.l1_values:
                    if not 0 < l1 <= d - 1:
                        raise ValueError(f"l1={l1} outside 1..{d - 1} for d={d}")
        return self

    @property
    def n_steps(self) -> int:
        if self.steps is not None:
            return self.steps
        return _DEFAULT_STEPS.get(self.family, _FIDELITY_STEPS)

    @property
    def grid(self) -> list[float]:
        return list(self.p_grid) if self.p_grid is not None else [float(p) for p in qec.default_p_grid()]


def _initial(d: int, levels: LogicalLevels, initial_state: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if initial_state == "full_entangled":
        eye = np.eye(d * d, dtype=complex)
        return full_entangled(d), eye, np.zeros_like(eye)
    p_en, q_en = encoding_projectors(d, levels)
    return logical_bell(d, levels), p_en, q_en


def fidelity_curve(model, d: int, levels: LogicalLevels | None = None, p: float = DEFAULT_P,
                   steps: int = _FIDELITY_STEPS, initial_state: str = "logical_bell") -> FidelitySeries:
    """Encoded process fidelity for t = 0..steps, errors on the second qudit.

    With ``initial_state="full_entangled"`` the projector is the identity,
    so the plain state fidelity is reported.
    """
    levels = (levels or LogicalLevels.polarized(d)).validate(d)
    rho0, p_en, _ = _initial(d, levels, initial_state)
    vals = [encoded_process_fidelity(rho0, rho, p_en)
            for rho in evolve(rho0, steps, (d, d), model, p, sites=(2,))]
    return FidelitySeries(np.arange(steps + 1), np.array(vals),
                          {"model": ErrorModel.parse(model).value, "d": d, "l0": levels.l0,
                           "l1": levels.l1, "p": p})


def entropy_curve(model, d: int, levels: LogicalLevels | None = None, p: float = DEFAULT_P,
                  steps: int = 1000, initial_state: str = "logical_bell", normalized: bool = False):
    levels = (levels or LogicalLevels.polarized(d)).validate(d)
    rho0, p_en, q_en = _initial(d, levels, initial_state)
    states = evolve(rho0, steps, (d, d), model, p, sites=(2,))
    return entropy_productions(states, p_en, q_en, normalized=normalized)


def _fidelity_cell(spec: ExperimentSpec, d: int, l0: int, l1: int) -> list[Row]:
    s = fidelity_curve(spec.model, d, LogicalLevels(l0, l1), spec.p, spec.n_steps, spec.initial_state)
    return [Row(spec.family, spec.model, d, l0, l1, spec.p, int(t), "encoded_fidelity", float(v))
            for t, v in zip(s.t, s.values)]


def _entropy_cell(spec: ExperimentSpec, d: int, l0: int, l1: int) -> list[Row]:
    es = entropy_curve(spec.model, d, LogicalLevels(l0, l1), spec.p, spec.n_steps,
                       spec.initial_state, spec.normalized_entropy)
    rows = []
    for metric, arr in es.as_dict().items():
        rows.extend(Row(spec.family, spec.model, d, l0, l1, spec.p, t, metric, float(v))
                    for t, v in enumerate(arr))
    return rows


def _kohlrausch_cell(spec: ExperimentSpec, d: int, l0: int, l1: int) -> list[Row]:
    s = fidelity_curve(spec.model, d, LogicalLevels(l0, l1), spec.p, spec.n_steps, spec.initial_state)
    f = fit(s, window=spec.fit_window)
    return [Row(spec.family, spec.model, d, l0, l1, spec.p, None, name, float(val))
            for name, val in (("b", f.b), ("tau", f.tau), ("alpha", f.alpha), ("sse", f.sse),
                              ("converged", float(f.converged)), ("n_points", float(f.n_points)))]


def _qec_cell(spec: ExperimentSpec, d: int, p: float, tau: int, index: int) -> list[Row]:
    rows = []

    def add(metric, value):
        rows.append(Row(spec.family, spec.model, d, None, None, p, tau, metric, float(value)))

    if spec.qec_mode == "dense":
        fq, bad = qec.qec_fidelity(d, spec.model, p, tau, rounds=spec.rounds)
        add("fidelity_qec", fq)
        add("fidelity_noqec", qec.baseline_fidelity(d, spec.model, p, tau))
        add("uncorrectable_fraction", bad)
    else:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, index]))
        fq, sq = qec.qec_round_trajectories(d, spec.model, p, tau, spec.trajectories, rng,
                                            rounds=spec.rounds)
        fb, sb = qec.baseline_trajectories(d, spec.model, p, tau, spec.trajectories, rng)
        add("fidelity_qec", fq)
        add("fidelity_qec_se", sq)
        add("fidelity_noqec", fb)
        add("fidelity_noqec_se", sb)
    return rows


def _level_pairs(spec: ExperimentSpec, d: int) -> list[tuple[int, int]]:
    if spec.family == "fidelity_vs_l1":
        l0 = spec.levels[0] if spec.levels else 0
        l1s = spec.l1_values or list(range(l0 + 1, d))
        return [(l0, l1) for l1 in l1s]
    if spec.family == "fidelity_shifted_pair":
        return [(k, k + spec.distance) for k in range(0, d - spec.distance)]
    if spec.levels is not None:
        return [tuple(spec.levels)]
    return [(0, d - 1)]


def _cells(spec: ExperimentSpec) -> list[tuple]:
    cells = []
    if spec.family == "qec_compare":
        i = 0
        for d in spec.d_values:
            for tau in spec.taus:
                for p in spec.grid:
                    cells.append((_qec_cell, spec, d, p, tau, i))
                    i += 1
        return cells
    func = {
        "fidelity_vs_d": _fidelity_cell,
        "fidelity_vs_l1": _fidelity_cell,
        "fidelity_shifted_pair": _fidelity_cell,
        "entropy_vs_d": _entropy_cell,
        "kohlrausch_table": _kohlrausch_cell,
    }[spec.family]
    for d in spec.d_values:
        for l0, l1 in _level_pairs(spec, d):
            cells.append((func, spec, d, l0, l1))
    return cells


def _error_row(cell: tuple, exc: BaseException) -> Row:
    func, spec, d = cell[:3]
    if func is _qec_cell:
        l0 = l1 = None
        p, t = cell[3], cell[4]
    else:
        l0, l1 = cell[3], cell[4]
        p, t = spec.p, None
    return Row(spec.family, spec.model, d, l0, l1, p, t, f"error:{type(exc).__name__}", float("nan"))


def _run_cell(cell: tuple) -> list[Row]:
    func, *args = cell
    try:
        return func(*args)
    except (QuditLabError, ArithmeticError, ValueError, MemoryError) as exc:
        log.error("cell %s failed: %s", args[1:], exc)
        return [_error_row(cell, exc)]


def run(spec: ExperimentSpec, jobs: int | None = None) -> list[Row]:
    """Execute every cell of ``spec``; rows come back in sweep order."""
    if not isinstance(spec, ExperimentSpec):
        raise ConfigError("run() needs an ExperimentSpec")
    cells = _cells(spec)
    jobs = jobs or os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if jobs == 1 or len(cells) == 1:
        chunks = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
            chunks = list(pool.map(_run_cell, cells))
    return [row for chunk in chunks for row in chunk]
