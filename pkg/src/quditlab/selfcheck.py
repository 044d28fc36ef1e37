"""Analytic self-checks run by ``quditlab validate``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import qec
from .experiments import fidelity_curve
from .kohlrausch import KohlrauschFit, fit, kohlrausch
from .metrics import FidelitySeries, fidelity
from .operators import encoding_projectors, full_entangled, gen_z, qudit_cnot, qudit_qft


def _closed_form_d2() -> str | None:
    expected = 0.5 + 0.5 * 0.98 ** np.arange(501)
    for model in ("z", "xprime"):
        got = fidelity_curve(model, 2, p=0.01, steps=500).values
        err = np.max(np.abs(got - expected))
        if err > 1e-9:
            return f"{model}: max deviation {err:.2e}"
    return None


def _projector_algebra() -> str | None:
    for d in range(2, 7):
        p, q = encoding_projectors(d)
        eye = np.eye(d * d)
        for name, val in (("P+Q-I", p + q - eye), ("PQ", p @ q), ("P^2-P", p @ p - p),
                          ("Q^2-Q", q @ q - q)):
            if np.max(np.abs(val)) > 1e-14:
                return f"d={d}: {name} nonzero"
    return None


def _gate_unitarity() -> str | None:
    for d in range(2, 9):
        for name, u in (("qft", qudit_qft(d)), ("cnot", qudit_cnot(d))):
            if np.max(np.abs(u @ u.conj().T - np.eye(len(u)))) > 1e-12:
                return f"{name} d={d} not unitary"
    return None


def _single_error_correction() -> str | None:
    for d in (2, 3):
        rho0 = full_entangled(d)
        for site in qec.DATA:
            for i in range(1, d):
                out = qec.inject(qec.encode(rho0, d), d, [(site, np.linalg.matrix_power(gen_z(d), i))])
                fid = fidelity(rho0, out.logical_state())
                if fid < 1 - 1e-9:
                    return f"d={d} qudit={site - 1} power={i}: fidelity {fid:.12f}"
    return None


def _fit_round_trip() -> str | None:
    t = np.arange(500.0)
    truth = KohlrauschFit(0.3, 100.0, 1.5)
    got = fit(FidelitySeries(t, kohlrausch(t, truth)))
    err = max(abs(got.b - truth.b), abs(got.tau - truth.tau), abs(got.alpha - truth.alpha))
    return None if err <= 1e-6 else f"parameter error {err:.2e}"


CHECKS: list[tuple[str, Callable[[], str | None]]] = [
    ("d=2 closed-form fidelity", _closed_form_d2),
    ("encoding projector algebra", _projector_algebra),
    ("QFT and CNOT unitarity", _gate_unitarity),
    ("single phase-error correction", _single_error_correction),
    ("Kohlrausch noiseless round trip", _fit_round_trip),
]


def run_checks() -> list[tuple[str, str | None]]:
    results = []
    for name, check in CHECKS:
        try:
            results.append((name, check()))
        except Exception as exc:  # a crashing check is a failed check
            results.append((name, f"{type(exc).__name__}: {exc}"))
    return results
