"""
Qudit operators and states.

Basis ordering: site 1 is the leftmost Kronecker factor (slowest index).
Public functions in this module and in :mod:`quditlab.channels` use
1-based site numbers, matching circuit drawings read top to bottom.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionCapExceeded, DimensionMismatch
from .linalg import kron_all

__all__ = [
    "MAX_REGISTER_DIM",
    "dense_cap",
    "check_dense",
    "RegisterShape",
    "LogicalLevels",
    "gen_x_prime",
    "gen_z",
    "cyclic_shift",
    "embed_at",
    "qudit_qft",
    "qudit_cnot",
    "qudit_cnot_dagger",
    "basis_projector",
    "encoding_projectors",
    "logical_bell",
    "full_entangled",
    "pure_density",
]

MAX_REGISTER_DIM = 10**5
_DEFAULT_DENSE_CAP = 4096


def dense_cap() -> int:
    """Largest density-matrix dimension materialized in memory.

    Overridable through the ``QUDITLAB_DENSE_CAP`` environment variable.
    """
    raw = os.environ.get("QUDITLAB_DENSE_CAP")
    if raw is None:
        return _DEFAULT_DENSE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"QUDITLAB_DENSE_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError("QUDITLAB_DENSE_CAP must be positive")
    return cap


def check_dense(dim: int) -> None:
    cap = dense_cap()
    if dim > cap:
        raise DimensionCapExceeded(f"density matrix of dimension {dim} exceeds dense cap {cap}")


def _check_d(d: int) -> int:
    if int(d) != d or d < 2:
        raise ConfigError(f"qudit dimension must be an integer >= 2, got {d}")
    return int(d)


@dataclass(frozen=True)
class RegisterShape:
    n: int
    d: int

    def __post_init__(self):
        _check_d(self.d)
        if self.n < 1:
            raise ConfigError(f"register needs at least one qudit, got n={self.n}")
        if self.d ** self.n > MAX_REGISTER_DIM:
            raise DimensionCapExceeded(
                f"register dimension {self.d}^{self.n} exceeds cap {MAX_REGISTER_DIM}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.d,) * self.n

    @property
    def dim(self) -> int:
        return self.d ** self.n


@dataclass(frozen=True)
class LogicalLevels:
    """Levels hosting the logical |0_L> and |1_L> states (0-based level indices)."""

    l0: int
    l1: int

    @classmethod
    def polarized(cls, d: int) -> "LogicalLevels":
        return cls(0, _check_d(d) - 1)

    def validate(self, d: int) -> "LogicalLevels":
        if not (0 <= self.l0 < self.l1 <= d - 1):
            raise ConfigError(f"need 0 <= l0 < l1 <= {d - 1}, got ({self.l0}, {self.l1})")
        return self


def gen_x_prime(d: int) -> np.ndarray:
    """Symmetric nearest-neighbour hop, no |d-1> <-> |0> wraparound."""
    d = _check_d(d)
    m = np.zeros((d, d), dtype=complex)
    k = np.arange(d - 1)
    m[k, k + 1] = 1.0
    m[k + 1, k] = 1.0
    return m


def gen_z(d: int) -> np.ndarray:
    d = _check_d(d)
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def cyclic_shift(d: int) -> np.ndarray:
    """Shift |k> -> |k+1 mod d>."""
    d = _check_d(d)
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def embed_at(op: np.ndarray, site: int, shape: RegisterShape) -> np.ndarray:
    """Place a single-qudit operator on ``site`` (1-based) of a register."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (shape.d, shape.d):
        raise DimensionMismatch(f"operator shape {op.shape} does not match d={shape.d}")
    if not 1 <= site <= shape.n:
        raise IndexError(f"site {site} outside 1..{shape.n}")
    eye = np.eye(shape.d, dtype=complex)
    return kron_all([op if i == site else eye for i in range(1, shape.n + 1)])


def qudit_qft(d: int) -> np.ndarray:
    d = _check_d(d)
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def qudit_cnot(d: int) -> np.ndarray:
    """Permutation |a, b> -> |a, a + b mod d> on two qudits (control first)."""
    d = _check_d(d)
    u = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            u[a * d + (a + b) % d, a * d + b] = 1.0
    return u


def qudit_cnot_dagger(d: int) -> np.ndarray:
    return qudit_cnot(d).T.copy()


def basis_projector(d: int, levels) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    for k in levels:
        p[k, k] = 1.0
    return p


def encoding_projectors(d: int, levels: LogicalLevels | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the encoding subspace of a two-qudit register and its complement."""
    d = _check_d(d)
    levels = (levels or LogicalLevels.polarized(d)).validate(d)
    single = basis_projector(d, (levels.l0, levels.l1))
    p_en = np.kron(single, single)
    return p_en, np.eye(d * d, dtype=complex) - p_en


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def logical_bell(d: int, levels: LogicalLevels | None = None, *, vector: bool = False) -> np.ndarray:
    """(|l0, l0> + |l1, l1>)/sqrt(2) on a two-qudit register."""
    d = _check_d(d)
    levels = (levels or LogicalLevels.polarized(d)).validate(d)
    psi = np.zeros(d * d, dtype=complex)
    psi[levels.l0 * d + levels.l0] = psi[levels.l1 * d + levels.l1] = 1 / np.sqrt(2)
    return psi if vector else pure_density(psi)


def full_entangled(d: int, *, vector: bool = False) -> np.ndarray:
    """Maximally entangled state over all d levels."""
    d = _check_d(d)
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return psi if vector else pure_density(psi)
