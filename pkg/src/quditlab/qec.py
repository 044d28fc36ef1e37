"""
Three-qudit repetition code against phase errors.

Register layout (1-based sites): 1 = reference, 2..4 = data qudits,
5..6 = syndrome ancillas. Data qudits are Fourier transformed before the
error block and transformed back after it, so a phase error ``Z^i`` turns
into a shift ``X^i`` that the stabilizers ``Z1 Z2^+`` and ``Z2 Z3^+``
detect. Ancillas enter only in the correcting stage, where each
measurement outcome ``(m1, m2)`` is turned into a branch operator on the
data qudits; summing branches gives the deterministic measurement channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .channels import ErrorModel, TrajectoryEnsemble, apply_model
from .errors import ConfigError, NonUnitTrace
from .linalg import apply_local, apply_local_vec, kron_all, partial_trace
from .metrics import fidelity
from .operators import (check_dense, cyclic_shift, full_entangled, gen_z, qudit_cnot,
                        qudit_cnot_dagger, qudit_qft)

__all__ = [
    "REF", "DATA", "ANCILLA",
    "stabilizers",
    "syndrome_operator",
    "syndrome_phases",
    "syndrome_branches",
    "correction_for",
    "correction_operator",
    "encode",
    "encode_vec",
    "QecOutcome",
    "qec_round",
    "inject",
    "qec_round_trajectories",
    "ComparisonPoint",
    "compare_with_without",
    "default_p_grid",
    "baseline_fidelity",
    "baseline_trajectories",
    "qec_fidelity",
]

REF = 1
DATA = (2, 3, 4)
ANCILLA = (5, 6)
_N_CORE = 4
TRACE_TOL = 1e-9


def _dims(d: int, n: int = _N_CORE) -> tuple[int, ...]:
    return (d,) * n


def default_p_grid(n: int = 21) -> np.ndarray:
    return np.logspace(-3, np.log10(0.5), n)


def stabilizers(d: int) -> tuple[np.ndarray, np.ndarray]:
    """``Z1 Z2^+`` and ``Z2 Z3^+`` on the three data qudits."""
    z = gen_z(d)
    eye = np.eye(d, dtype=complex)
    return kron_all([z, z.conj().T, eye]), kron_all([eye, z, z.conj().T])


@lru_cache(maxsize=None)
def syndrome_phases(d: int) -> np.ndarray:
    """Diagonal of the syndrome operator on data (3 qudits) x ancillas (2 qudits).

    Both stabilizers are diagonal, so ``sum_k S1^k1 S2^k2 (x) |k1 k2><k1 k2|``
    is diagonal as well.
    """
    s1, s2 = (np.diag(s) for s in stabilizers(d))
    k = np.arange(d)
    ph = (s1[:, None, None] ** k[None, :, None]) * (s2[:, None, None] ** k[None, None, :])
    ph.setflags(write=False)
    return ph.reshape(-1)


def syndrome_operator(d: int) -> np.ndarray:
    """Controlled stabilizer powers on data (x) ancillas as a dense unitary."""
    check_dense(d ** 5)
    return np.diag(syndrome_phases(d))


@lru_cache(maxsize=None)
def syndrome_branches(d: int) -> dict[tuple[int, int], np.ndarray]:
    """Data-qudit operators for each ancilla outcome of the extraction circuit.

    Ancillas start in |00>, get a QFT each, the syndrome operator couples
    them to the data, then QFT^+ and a computational-basis readout of
    ``(m1, m2)``. The returned operator maps the data input to the
    (unnormalized) data output of that branch.
    """
    f = qudit_qft(d)
    dd = d ** 3
    anc = np.zeros((d, d), dtype=complex)
    anc[0, 0] = 1.0
    anc = f @ anc @ f.T  # QFT (x) QFT on |00>
    # columns: data basis input j; tensor (j_out, a1, a2) with j_out == j
    state = np.einsum("jk,ab->jkab", np.eye(dd, dtype=complex), anc)
    state = state * syndrome_phases(d).reshape(dd, 1, d, d)
    fd = f.conj().T
    state = np.einsum("ma,nb,jkab->jkmn", fd, fd, state)
    out = {}
    for m1 in range(d):
        for m2 in range(d):
            op = state[:, :, m1, m2].T  # rows: output, cols: input
            op.setflags(write=False)
            out[(m1, m2)] = op
    return out


def correction_for(m1: int, m2: int, d: int) -> tuple[int, int, int] | None:
    """Shift powers ``(x1, x2, x3)`` for a syndrome, or ``None`` if unlisted.

    ``(0, 0)`` means no error and maps to ``(0, 0, 0)``.
    """
    m1 %= d
    m2 %= d
    if m1 == 0 and m2 == 0:
        return (0, 0, 0)
    if m2 == 0:
        return (m1, 0, 0)
    if m1 == (-m2) % d:
        return (0, m2, 0)
    if m1 == 0:
        return (0, 0, (-m2) % d)
    return None


def correction_operator(x: Sequence[int], d: int) -> np.ndarray:
    """``(X^+)^x1 (x) (X^+)^x2 (x) (X^+)^x3`` with X the cyclic shift."""
    xd = cyclic_shift(d).conj().T
    return kron_all([np.linalg.matrix_power(xd, int(xi)) for xi in x])


def _cnot_1k(d: int, target: int, gate: np.ndarray) -> np.ndarray:
    """Two-qudit ``gate`` with data qudit 1 as control and ``target`` (2 or 3)."""
    g = np.kron(gate, np.eye(d, dtype=complex))
    if target == 2:
        return g
    swap23 = np.eye(d ** 3).reshape((d,) * 6).transpose(0, 2, 1, 3, 4, 5).reshape(d ** 3, d ** 3)
    return swap23 @ g @ swap23


@lru_cache(maxsize=None)
def _encoder(d: int) -> np.ndarray:
    """CNOT(1,2) CNOT(1,3) on the data block, as a d^3 x d^3 matrix."""
    enc = _cnot_1k(d, 2, qudit_cnot(d)) @ _cnot_1k(d, 3, qudit_cnot(d))
    enc.setflags(write=False)
    return enc


@lru_cache(maxsize=None)
def _disentangler(d: int) -> np.ndarray:
    """CNOT^+(1,2) CNOT^+(1,3): CNOT^+(1,3) acts first."""
    dis = _cnot_1k(d, 2, qudit_cnot_dagger(d)) @ _cnot_1k(d, 3, qudit_cnot_dagger(d))
    dis.setflags(write=False)
    return dis


def _lift(rho_2q: np.ndarray, d: int) -> np.ndarray:
    zero = np.zeros((d * d, d * d), dtype=complex)
    zero[0, 0] = 1.0
    return np.kron(rho_2q, zero)


def encode(rho: np.ndarray, d: int) -> np.ndarray:
    """Encode data qudit 1 of a (reference, data) pair into three data qudits.

    Returns the 4-qudit density matrix with ``|k> -> |k, k, k>`` on the data.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d * d, d * d):
        raise ConfigError(f"expected a two-qudit state of dimension {d * d}")
    check_dense(d ** _N_CORE)
    return apply_local(_lift(rho, d), _encoder(d), (1, 2, 3), _dims(d))


def encode_vec(psi: np.ndarray, d: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    zero = np.zeros(d * d, dtype=complex)
    zero[0] = 1.0
    lifted = np.einsum("...i,j->...ij", psi, zero).reshape(psi.shape[:-1] + (d ** _N_CORE,))
    return apply_local_vec(lifted, _encoder(d), (1, 2, 3), _dims(d))


def _qft_data(rho: np.ndarray, d: int, inverse: bool = False) -> np.ndarray:
    f = qudit_qft(d)
    f = f.conj().T if inverse else f
    for site in DATA:
        rho = apply_local(rho, f, site - 1, _dims(d))
    return rho


@dataclass
class QecOutcome:
    """Result of the correcting stage on the 4-qudit (reference + data) register."""

    rho: np.ndarray
    d: int
    syndrome_probs: dict = field(default_factory=dict)
    uncorrectable_fraction: float = 0.0

    def logical_state(self) -> np.ndarray:
        """Reduced state of the reference and first data qudit."""
        return partial_trace(self.rho, _dims(self.d), keep=(0, 1))


def _correct(rho: np.ndarray, d: int) -> tuple[np.ndarray, dict, float]:
    dims = _dims(d)
    out = np.zeros_like(rho)
    probs = {}
    bad = 0.0
    for m, k_op in syndrome_branches(d).items():
        x = correction_for(*m, d)
        op = k_op if x is None else correction_operator(x, d) @ k_op
        branch = apply_local(rho, op, (1, 2, 3), dims)
        pm = float(np.trace(branch).real)
        probs[m] = pm
        if x is None:
            bad += pm
        out += branch
    total = np.trace(out).real
    if abs(total - 1.0) > TRACE_TOL:
        raise NonUnitTrace(f"branch sum has trace {total!r}")
    return out, probs, bad


def _run_round(rho: np.ndarray, d: int, error_block: Callable[[np.ndarray], np.ndarray],
               rounds: int) -> QecOutcome:
    dims = _dims(d)
    check_dense(d ** _N_CORE)
    probs: dict = {}
    bad = 0.0
    for _ in range(rounds):
        rho = _qft_data(rho, d)
        rho = error_block(rho)
        rho = _qft_data(rho, d, inverse=True)
        rho, probs, bad = _correct(rho, d)
    rho = apply_local(rho, _disentangler(d), (1, 2, 3), dims)
    return QecOutcome(rho=rho, d=d, syndrome_probs=probs, uncorrectable_fraction=bad)


def qec_round(rho: np.ndarray, d: int, model, p: float, tau: int, rounds: int = 1) -> QecOutcome:
    """Error block, syndrome extraction, correction and disentangling.

    ``rho`` is an encoded 4-qudit state (see :func:`encode`). Each round
    applies QFT to the data qudits, ``tau`` error steps on the data qudits
    only, QFT^+, then the measure-and-correct branch sum. The
    disentangling CNOT^+ gates run once, after the last round.
    """
    if tau < 0 or rounds < 1:
        raise ConfigError("need tau >= 0 and rounds >= 1")
    model = ErrorModel.parse(model)
    dims = _dims(d)

    def errors(r: np.ndarray) -> np.ndarray:
        for _ in range(tau):
            r = apply_model(r, dims, model, p, sites=DATA[::-1])
        return r

    return _run_round(rho, d, errors, rounds)


def inject(rho: np.ndarray, d: int, errors: Sequence[tuple[int, np.ndarray]]) -> QecOutcome:
    """One round with deterministic single-qudit ``errors`` in place of the channel.

    ``errors`` lists ``(site, operator)`` pairs with 1-based data sites
    (2, 3 or 4); they act between the QFT and QFT^+ like channel errors do.
    """
    dims = _dims(d)
    for site, _ in errors:
        if site not in DATA:
            raise ConfigError(f"errors may only hit data sites {DATA}, got {site}")

    def block(r: np.ndarray) -> np.ndarray:
        for site, op in errors:
            r = apply_local(r, op, site - 1, dims)
        return r

    return _run_round(rho, d, block, 1)


def _branch_fidelities(states: np.ndarray, d: int, target: np.ndarray) -> np.ndarray:
    """Per-trajectory ``<target| Tr_{D2,D3}[C(|psi><psi|)] |target>`` after correction."""
    dims = _dims(d)
    dis = _disentangler(d)
    fids = np.zeros(len(states))
    for m, k_op in syndrome_branches(d).items():
        x = correction_for(*m, d)
        op = k_op if x is None else correction_operator(x, d) @ k_op
        v = apply_local_vec(states, dis @ op, (1, 2, 3), dims)
        amp = np.einsum("i,nij->nj", target.conj(), v.reshape(len(states), d * d, d * d))
        fids += np.einsum("nj,nj->n", amp.conj(), amp).real
    return fids


def qec_round_trajectories(d: int, model, p: float, tau: int, n_traj: int,
                           rng: np.random.Generator, rounds: int = 1) -> tuple[float, float]:
    """Mean QEC process fidelity from weighted pure-state trajectories.

    Returns ``(estimate, standard_error)``. The correcting stage is still a
    deterministic branch sum per trajectory; only the errors are sampled.
    """
    if rounds != 1:
        raise ConfigError("trajectory mode supports a single correction round")
    model = ErrorModel.parse(model)
    dims = _dims(d)
    target = full_entangled(d, vector=True)
    ens = TrajectoryEnsemble(encode_vec(np.tile(target, (n_traj, 1)), d), dims)
    f = qudit_qft(d)
    for site in DATA:
        ens.apply_unitary(f, site)
    for _ in range(tau):
        ens.apply_model(model, p, DATA[::-1], rng)
    for site in DATA:
        ens.apply_unitary(f.conj().T, site)
    return ens.ratio_estimate(_branch_fidelities(ens.states, d, target))


def baseline_fidelity(d: int, model, p: float, tau: int) -> float:
    """Unprotected pair: errors on the second qudit only, no encoding."""
    rho0 = full_entangled(d)
    rho = rho0
    for _ in range(tau):
        rho = apply_model(rho, (d, d), model, p, sites=(2,))
    return fidelity(rho0, rho)


def baseline_trajectories(d: int, model, p: float, tau: int, n_traj: int,
                          rng: np.random.Generator) -> tuple[float, float]:
    psi0 = full_entangled(d, vector=True)
    ens = TrajectoryEnsemble.replicate(psi0, n_traj, (d, d))
    for _ in range(tau):
        ens.apply_model(model, p, (2,), rng)
    overlap = np.abs(ens.states @ psi0.conj()) ** 2
    return ens.ratio_estimate(overlap)


def qec_fidelity(d: int, model, p: float, tau: int, rounds: int = 1) -> tuple[float, float]:
    """Process fidelity with QEC and the uncorrectable-syndrome probability."""
    rho0 = full_entangled(d)
    out = qec_round(encode(rho0, d), d, model, p, tau, rounds=rounds)
    return fidelity(rho0, out.logical_state()), out.uncorrectable_fraction


@dataclass(frozen=True)
class ComparisonPoint:
    model: str
    d: int
    p: float
    tau: int
    with_qec: float
    without_qec: float
    uncorrectable_fraction: float = float("nan")
    with_qec_se: float = 0.0
    without_qec_se: float = 0.0


def compare_with_without(model, d: int, p_grid: Iterable[float] | None = None,
                         tau: int = 1, *, mode: str = "dense", n_traj: int = 10_000,
                         seed: int = 42, rounds: int = 1) -> list[ComparisonPoint]:
    """Process fidelity with and without QEC along a grid of error probabilities."""
    model = ErrorModel.parse(model)
    grid = default_p_grid() if p_grid is None else np.asarray(list(p_grid), dtype=float)
    out = []
    if mode == "dense":
        for p in grid:
            fq, bad = qec_fidelity(d, model, p, tau, rounds=rounds)
            fb = baseline_fidelity(d, model, p, tau)
            out.append(ComparisonPoint(model.value, d, float(p), tau, fq, fb, bad))
    elif mode == "trajectory":
        rng = np.random.default_rng(seed)
        for p in grid:
            fq, sq = qec_round_trajectories(d, model, p, tau, n_traj, rng, rounds=rounds)
            fb, sb = baseline_trajectories(d, model, p, tau, n_traj, rng)
            out.append(ComparisonPoint(model.value, d, float(p), tau, fq, fb,
                                       with_qec_se=sq, without_qec_se=sb))
    else:
        raise ConfigError(f"unknown mode {mode!r}; expected dense or trajectory")
    return out

