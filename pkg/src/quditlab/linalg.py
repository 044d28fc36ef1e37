"""
Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Multi-qudit registers use row-major (C) ordering: site 0 is the
slowest-varying tensor index, i.e. the leftmost Kronecker factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput, NotPSD

__all__ = [
    "HermitianEig",
    "kron",
    "kron_all",
    "dagger",
    "matmul",
    "trace",
    "hermitian_eig",
    "psd_sqrt",
    "clamped_eigvalsh",
    "apply_local",
    "apply_local_vec",
    "partial_trace",
    "HERMITIAN_TOL",
    "PSD_TOL",
]

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


def _as_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class HermitianEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` as the slower-varying factor."""
    return np.kron(_as_square(a, "a"), _as_square(b, "b"))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    if not factors:
        raise ValueError("need at least one factor")
    return reduce(kron, factors)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def trace(a: np.ndarray) -> complex:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"trace needs a square matrix, got {a.shape}")
    return complex(np.trace(a))


def hermitian_eig(m: np.ndarray, tol: float = HERMITIAN_TOL) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized before decomposition; deviations from
    Hermiticity larger than ``tol`` (scaled by ``max(1, |m|_max)``) raise
    :class:`NonHermitianInput`.
    """
    m = _as_square(m)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if dev > tol * scale:
        raise NonHermitianInput(f"Hermiticity deviation {dev:.3e} exceeds {tol:.1e}")
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    return HermitianEig(eigenvalues=w, eigenvectors=v)


def clamped_eigvalsh(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Eigenvalues of a PSD Hermitian matrix with roundoff negatives set to zero."""
    w = hermitian_eig(m).eigenvalues
    if w.size and w[0] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -{tol:.1e}")
    return np.clip(w, 0.0, None)


def psd_sqrt(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues in ``[-tol, 0)`` are clamped to 0."""
    eig = hermitian_eig(m)
    w = eig.eigenvalues
    if w.size and w[0] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -{tol:.1e}")
    v = eig.eigenvectors
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return 0.5 * (root + root.conj().T)


def _check_dims(dims: Sequence[int], total: int) -> tuple[int, ...]:
    dims = tuple(int(x) for x in dims)
    if int(np.prod(dims)) != total:
        raise DimensionMismatch(f"register dims {dims} do not match dimension {total}")
    return dims


def _site_list(sites, dims) -> tuple[int, ...]:
    sites = (sites,) if isinstance(sites, (int, np.integer)) else tuple(int(s) for s in sites)
    n = len(dims)
    if len(set(sites)) != len(sites):
        raise ValueError(f"repeated sites {sites}")
    for s in sites:
        if not 0 <= s < n:
            raise IndexError(f"site {s} out of range for {n} sites")
    return sites


def _contract(t: np.ndarray, op: np.ndarray, sites: tuple[int, ...], dims, offset: int) -> np.ndarray:
    """Contract ``op`` (acting on ``sites``) into tensor axes ``offset + sites``."""
    sub = tuple(dims[s] for s in sites)
    k = len(sites)
    op_t = op.reshape(sub + sub)
    axes = [offset + s for s in sites]
    t = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(t, list(range(k)), axes)


def _check_op(op, sites, dims) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    sub = int(np.prod([dims[s] for s in sites]))
    if op.shape != (sub, sub):
        raise DimensionMismatch(f"operator {op.shape} does not fit sites {sites} of total dimension {sub}")
    return op


def apply_local(rho: np.ndarray, op: np.ndarray, site, dims: Sequence[int],
                right: np.ndarray | None = None) -> np.ndarray:
    """Return ``O rho R^dagger`` with ``O`` acting on ``site`` (0-based).

    ``site`` may be a tuple of sites for multi-qudit operators, ordered as
    the operator's own tensor factors. ``right`` defaults to ``op``.
    """
    dims = _check_dims(dims, rho.shape[0])
    n = len(dims)
    sites = _site_list(site, dims)
    op = _check_op(op, sites, dims)
    right = op if right is None else _check_op(right, sites, dims)
    t = rho.reshape(dims + dims)
    t = _contract(t, op, sites, dims, 0)
    t = _contract(t, right.conj(), sites, dims, n)
    return t.reshape(rho.shape)


def apply_local_vec(psi: np.ndarray, op: np.ndarray, site, dims: Sequence[int]) -> np.ndarray:
    """Apply an operator on ``site`` (0-based, or a tuple) to state vectors.

    ``psi`` may be a single vector of length ``prod(dims)`` or a batch of
    shape ``(N, prod(dims))``.
    """
    psi = np.asarray(psi, dtype=complex)
    dims = _check_dims(dims, psi.shape[-1])
    sites = _site_list(site, dims)
    op = _check_op(op, sites, dims)
    lead = psi.shape[:-1]
    t = psi.reshape(lead + dims)
    t = _contract(t, op, sites, dims, len(lead))
    return t.reshape(psi.shape)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every site not listed in ``keep`` (0-based, order preserved)."""
    dims = _check_dims(dims, rho.shape[0])
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    drop = [i for i in range(n) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters) * 2:
        raise ValueError("too many sites")
    row = [letters[i] for i in range(n)]
    col = [letters[i].upper() for i in range(n)]
    for i in drop:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    kept = int(np.prod([dims[i] for i in keep])) if keep else 1
    res = np.einsum("".join(row) + "".join(col) + "->" + out, rho.reshape(dims + dims))
    return res.reshape(kept, kept)
