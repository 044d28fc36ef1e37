"""Fidelities and von Neumann entropies (natural log) of register states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, EmptyEncodingSupport, NotPSD
from .linalg import PSD_TOL, clamped_eigvalsh, hermitian_eig

__all__ = [
    "EntropySeries",
    "fidelity",
    "encoded_process_fidelity",
    "von_neumann_entropy",
    "entropy_productions",
    "project",
    "FidelitySeries",
]

EMPTY_SUPPORT_TOL = 1e-12
_ZERO_EIG = 1e-14


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"state shapes differ: {rho.shape} vs {sigma.shape}")
    # Work in the support of the lower-rank argument: for a pure state the
    # inner matrix is 1x1 and no roundoff eigenvalues leak through the sqrt.
    supports = [_support(rho), _support(sigma)]
    if supports[1][0].size < supports[0][0].size:
        supports.reverse()
        rho, sigma = sigma, rho
    w, v = supports[0]
    half = v * np.sqrt(w)
    inner = half.conj().T @ sigma @ half
    ev = clamped_eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(ev)) ** 2)


def _support(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eig = hermitian_eig(rho)
    w = eig.eigenvalues
    if w.size and w[0] < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -{PSD_TOL:.1e}")
    keep = w > _ZERO_EIG
    return w[keep], eig.eigenvectors[:, keep]


def project(rho: np.ndarray, proj: np.ndarray) -> np.ndarray:
    return proj @ rho @ proj


def encoded_process_fidelity(rho_ini: np.ndarray, rho_t: np.ndarray, p_en: np.ndarray) -> float:
    """Fidelity of ``rho_ini`` with the normalized encoding-subspace projection of ``rho_t``."""
    proj = project(rho_t, p_en)
    tr = np.trace(proj).real
    if tr <= EMPTY_SUPPORT_TOL:
        raise EmptyEncodingSupport(f"projected trace {tr:.3e} underflows")
    return fidelity(rho_ini, proj / tr)


def von_neumann_entropy(m: np.ndarray) -> float:
    """-Tr[m ln m] in nats; unnormalized (sub-unit trace) inputs are allowed."""
    ev = clamped_eigvalsh(m)
    ev = ev[ev > _ZERO_EIG]
    return float(-np.sum(ev * np.log(ev)))


@dataclass
class EntropySeries:
    """Per-step entropies and their productions; ``dS[0] == S[0]``."""

    s_total: np.ndarray
    s_en: np.ndarray
    s_nonen: np.ndarray

    @staticmethod
    def _production(s: np.ndarray) -> np.ndarray:
        return np.diff(s, prepend=0.0)

    @property
    def ds_total(self) -> np.ndarray:
        return self._production(self.s_total)

    @property
    def ds_en(self) -> np.ndarray:
        return self._production(self.s_en)

    @property
    def ds_nonen(self) -> np.ndarray:
        return self._production(self.s_nonen)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "S_total": self.s_total, "S_en": self.s_en, "S_nonen": self.s_nonen,
            "dS_total": self.ds_total, "dS_en": self.ds_en, "dS_nonen": self.ds_nonen,
        }


def entropy_productions(states: Iterable[np.ndarray], p_en: np.ndarray, q_en: np.ndarray,
                        normalized: bool = False) -> EntropySeries:
    """Entropies of the total state and its P/Q projections for each state.

    By default the projections ``P rho P`` and ``Q rho Q`` are used
    unnormalized. ``normalized=True`` divides each projection by its trace
    (zero projections stay zero).
    """
    tot, en, non = [], [], []
    for rho in states:
        if rho.shape != p_en.shape:
            raise DimensionMismatch("state and projector dimensions differ")
        r_en = project(rho, p_en)
        r_non = project(rho, q_en)
        if normalized:
            for arr in (r_en, r_non):
                tr = np.trace(arr).real
                if tr > EMPTY_SUPPORT_TOL:
                    arr /= tr
        tot.append(von_neumann_entropy(rho))
        en.append(von_neumann_entropy(r_en))
        non.append(von_neumann_entropy(r_non))
    return EntropySeries(np.array(tot), np.array(en), np.array(non))


@dataclass
class FidelitySeries:
    """Time-indexed scalar metric for one experiment cell."""

    t: np.ndarray
    values: np.ndarray
    label: dict = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.shape != self.values.shape or self.t.ndim != 1:
            raise DimensionMismatch("t and values must be 1-D arrays of equal length")
        if self.label is None:
            self.label = {}

    def __len__(self) -> int:
        return len(self.t)
