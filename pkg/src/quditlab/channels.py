"""
Discrete-time error channels on qudit registers.

A single-site channel maps

    rho -> (1 - p) rho + (p / K) * sum_k U_k rho U_k^+ / Tr[U_k rho U_k^+]

with ``U_k`` acting on one qudit. The generalized Pauli X' is not unitary
for d >= 3, so the trace denominator is applied literally; this makes the
map nonlinear in ``rho`` whenever an error operator is non-unitary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, DegenerateErrorBranch, DimensionMismatch, NonUnitTrace
from .linalg import apply_local, apply_local_vec
from .operators import RegisterShape, check_dense, gen_x_prime, gen_z

__all__ = [
    "DEFAULT_P",
    "ErrorModel",
    "Channel",
    "channel_for",
    "apply_single_site",
    "apply_model",
    "evolve",
    "TrajectoryEnsemble",
]

# Backed out of the d=2 lifetime: exp(-1/49.498) = 1 - 2p.
DEFAULT_P = 0.01

TRACE_TOL = 1e-9
_BRANCH_FLOOR = 1e-14


class ErrorModel(str, enum.Enum):
    Z = "z"
    XPRIME = "xprime"
    XPRIME_Z = "xprime+z"

    @classmethod
    def parse(cls, value) -> "ErrorModel":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace(" ", "")
        aliases = {
            "z": cls.Z,
            "xprime": cls.XPRIME, "x'": cls.XPRIME, "xp": cls.XPRIME, "x": cls.XPRIME,
            "xprime+z": cls.XPRIME_Z, "x'+z": cls.XPRIME_Z, "xp+z": cls.XPRIME_Z,
            "xz": cls.XPRIME_Z, "xprimez": cls.XPRIME_Z, "xprime_z": cls.XPRIME_Z,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown error model {value!r}; expected z, xprime or xprime+z") from None

    def operators(self, d: int) -> list[np.ndarray]:
        if self is ErrorModel.Z:
            return [gen_z(d)]
        if self is ErrorModel.XPRIME:
            return [gen_x_prime(d)]
        return [gen_x_prime(d), gen_z(d)]


@dataclass(frozen=True)
class Channel:
    """Error probability ``p`` and the K single-qudit error operators."""

    p: float
    operators: tuple[np.ndarray, ...]
    target_sites: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"error probability must lie in [0, 1], got {self.p}")
        if len(self.operators) < 1:
            raise ConfigError("a channel needs at least one error operator")
        shape = self.operators[0].shape
        for op in self.operators:
            if op.shape != shape or op.ndim != 2 or shape[0] != shape[1]:
                raise DimensionMismatch("error operators must be square and of equal size")
            if not np.all(np.isfinite(op)):
                raise ConfigError("error operators must be finite")

    @property
    def K(self) -> int:
        return len(self.operators)

    @property
    def d(self) -> int:
        return self.operators[0].shape[0]

    def is_unitary(self, tol: float = 1e-10) -> bool:
        eye = np.eye(self.d)
        return all(np.allclose(u @ u.conj().T, eye, atol=tol) for u in self.operators)


def channel_for(model, d: int, p: float, sites: Sequence[int] = ()) -> Channel:
    model = ErrorModel.parse(model)
    return Channel(p=float(p), operators=tuple(model.operators(d)), target_sites=tuple(sites))


def _dims(shape) -> tuple[int, ...]:
    if isinstance(shape, RegisterShape):
        return shape.dims
    return tuple(int(x) for x in shape)


def apply_single_site(rho: np.ndarray, site: int, ch: Channel, shape) -> np.ndarray:
    """Apply ``ch`` to qudit ``site`` (1-based) of a register density matrix."""
    dims = _dims(shape)
    if not 1 <= site <= len(dims):
        raise IndexError(f"site {site} outside 1..{len(dims)}")
    if ch.target_sites and site not in ch.target_sites:
        raise ConfigError(f"site {site} is not among the channel's targets {ch.target_sites}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise NonUnitTrace(f"input trace {tr!r} deviates from 1")
    if ch.p == 0.0:
        return rho.copy()
    out = (1.0 - ch.p) * rho
    for op in ch.operators:
        branch = apply_local(rho, op, site - 1, dims)
        norm = np.trace(branch).real
        if norm < _BRANCH_FLOOR:
            raise DegenerateErrorBranch(f"error operator annihilates the state on site {site}")
        out = out + (ch.p / ch.K) * branch / norm
    return out


def apply_model(rho: np.ndarray, shape, model, p: float, sites: Sequence[int]) -> np.ndarray:
    """Compose single-site maps over ``sites`` in the order listed.

    The register-wide map nests the highest site innermost, so callers
    reproducing it pass sites in descending order.
    """
    dims = _dims(shape)
    if len(set(dims)) != 1:
        raise DimensionMismatch("error models need a uniform register")
    ch = channel_for(model, dims[0], p, sites)
    for site in sites:
        rho = apply_single_site(rho, site, ch, dims)
    return rho


def evolve(rho0: np.ndarray, steps: int, shape, model, p: float,
           sites: Sequence[int]) -> Iterator[np.ndarray]:
    """Yield rho_0, rho_1, ..., rho_steps under repeated application of the model."""
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    check_dense(rho0.shape[0])
    rho = np.asarray(rho0, dtype=complex)
    yield rho
    for _ in range(steps):
        rho = apply_model(rho, shape, model, p, sites)
        yield rho


class TrajectoryEnsemble:
    """Weighted pure-state unravelling of the error channels.

    Each step a trajectory keeps its state with probability ``1 - p`` or
    jumps to the normalized ``U_k psi`` with probability ``p/K``. Jumps
    rescale the trajectory weight by ``|U_k psi|^2 / c_k`` where ``c_k`` is
    the ensemble estimate of ``Tr[U_k rho U_k^+]``; for unitary operators
    the factor is exactly one. The weighted ensemble reproduces the
    density-matrix map in expectation.
    """

    def __init__(self, states: np.ndarray, dims: Sequence[int], weights: np.ndarray | None = None):
        states = np.asarray(states, dtype=complex)
        if states.ndim != 2:
            raise DimensionMismatch("states must have shape (N, dim)")
        self.dims = tuple(int(x) for x in dims)
        if int(np.prod(self.dims)) != states.shape[1]:
            raise DimensionMismatch("state length does not match register dims")
        self.states = states
        self.weights = np.ones(len(states)) if weights is None else np.asarray(weights, dtype=float)

    @classmethod
    def replicate(cls, psi: np.ndarray, n: int, dims: Sequence[int]) -> "TrajectoryEnsemble":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.tile(psi, (n, 1)), dims)

    def __len__(self) -> int:
        return len(self.states)

    def apply_unitary(self, op: np.ndarray, site: int) -> None:
        self.states = apply_local_vec(self.states, op, site - 1, self.dims)

    def apply_site(self, site: int, ch: Channel, rng: np.random.Generator) -> None:
        n = len(self.states)
        u = rng.random(n)
        if ch.p == 0.0:
            return
        choice = np.where(u < ch.p, np.minimum((u / (ch.p / ch.K)).astype(int), ch.K - 1), -1)
        wsum = self.weights.sum()
        new_states = self.states.copy()
        new_weights = self.weights.copy()
        for k, op in enumerate(ch.operators):
            hit = choice == k
            if not hit.any():
                continue
            moved = apply_local_vec(self.states, op, site - 1, self.dims)
            norms = np.einsum("ij,ij->i", moved.conj(), moved).real
            c_k = float(np.dot(self.weights, norms) / wsum)
            if np.any(norms[hit] < _BRANCH_FLOOR):
                raise DegenerateErrorBranch(f"error operator annihilates a trajectory on site {site}")
            new_states[hit] = moved[hit] / np.sqrt(norms[hit])[:, None]
            new_weights[hit] = self.weights[hit] * norms[hit] / c_k
        self.states = new_states
        self.weights = new_weights

    def apply_model(self, model, p: float, sites: Sequence[int], rng: np.random.Generator) -> None:
        ch = channel_for(model, self.dims[0], p, sites)
        for site in sites:
            self.apply_site(site, ch, rng)

    def density(self) -> np.ndarray:
        w = self.weights / self.weights.sum()
        return np.einsum("n,ni,nj->ij", w, self.states, self.states.conj())

    def ratio_estimate(self, num: np.ndarray, den: np.ndarray | None = None) -> tuple[float, float]:
        """Weighted estimate of ``E[w num] / E[w den]`` and its standard error."""
        a = self.weights * np.asarray(num, dtype=float)
        b = self.weights * (np.ones_like(a) if den is None else np.asarray(den, dtype=float))
        n = len(a)
        r = a.sum() / b.sum()
        resid = a - r * b
        se = np.sqrt(np.sum(resid ** 2) / (n * (n - 1))) / b.mean() if n > 1 else float("nan")
        return float(r), float(se)
