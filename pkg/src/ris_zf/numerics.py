"""Dense complex linear-algebra kernels.

Thin wrappers around LAPACK (through :mod:`numpy.linalg`) that fix the
conventions used throughout the package: descending Hermitian spectra,
economy QR, a scale-invariant pseudoinverse rank cut, and principal
eigenpairs of ``A @ diag(g)`` computed through a Hermitian similarity.

The module also carries a small arithmetic-operation counter.  Kernels
called inside :func:`count_ops` tally a flop estimate derived only from
operand shapes, which lets callers verify that a code path's cost does not
depend on some problem dimension.
"""

from __future__ import annotations

import contextlib
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "HermitianEig",
    "OpCounter",
    "count_ops",
    "hermitian_evd",
    "thin_qr",
    "pseudoinverse",
    "principal_eigpair_psd_weighted",
    "matmul",
    "solve",
    "inv",
    "PINV_RTOL",
]

PINV_RTOL = 1e-12


@dataclass
class OpCounter:
    """Accumulated flop estimates, keyed by kernel name."""

    flops: int = 0
    calls: dict = field(default_factory=dict)

    def add(self, kind: str, flops: int) -> None:
        self.flops += int(flops)
        self.calls[kind] = self.calls.get(kind, 0) + 1


_COUNTER: ContextVar[OpCounter | None] = ContextVar("ris_zf_op_counter", default=None)


@contextlib.contextmanager
def count_ops() -> Iterator[OpCounter]:
    """Count arithmetic done by the kernels of this module within the block."""
    counter = OpCounter()
    token = _COUNTER.set(counter)
    try:
        yield counter
    finally:
        _COUNTER.reset(token)


def _tally(kind: str, flops: int) -> None:
    counter = _COUNTER.get()
    if counter is not None:
        counter.add(kind, flops)


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_square(a: np.ndarray, name: str = "A") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")


def hermitian_evd(a) -> HermitianEig:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input is symmetrized as ``(A + A^H) / 2`` before factorization.
    """
    a = np.asarray(a, dtype=complex)
    _check_square(a)
    n = a.shape[0]
    _tally("evd", 10 * n**3)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return HermitianEig(w[::-1].copy(), v[:, ::-1].copy())


def thin_qr(m) -> tuple[np.ndarray, np.ndarray]:
    """Economy QR factorization ``M = Q R`` for a tall matrix.

    Returns ``Q`` with orthonormal columns (m x n) and upper-triangular ``R``
    (n x n).  Requires ``m >= n``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError("QR input must be a matrix")
    rows, cols = m.shape
    if rows < cols:
        raise DimensionError(f"thin QR needs rows >= cols, got {rows}x{cols}")
    _tally("qr", 4 * rows * cols**2)
    q, r = np.linalg.qr(m, mode="reduced")
    return q, r


def pseudoinverse(m, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values at or below ``rtol * sigma_max`` are treated as zero,
    so the zero matrix maps to the zero matrix of transposed shape.
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    rows, cols = m.shape
    _tally("svd", 10 * max(rows, cols) * min(rows, cols) ** 2)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((cols, rows), dtype=complex)
    keep = s > rtol * s[0]
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def principal_eigpair_psd_weighted(a, g) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and unit eigenvector of ``A @ diag(g)``.

    ``A`` is Hermitian PSD and ``g`` strictly positive.  The eigenproblem is
    solved on ``diag(g)^(1/2) A diag(g)^(1/2)`` (same spectrum) and the
    eigenvector is mapped back with ``diag(g)^(-1/2)``.
    """
    a = np.asarray(a, dtype=complex)
    g = np.asarray(g, dtype=float)
    _check_square(a)
    if g.shape != (a.shape[0],):
        raise DimensionError("weight vector length must match A")
    if np.any(g <= 0.0) or not np.all(np.isfinite(g)):
        raise DomainError("weights must be strictly positive")
    sg = np.sqrt(g)
    lam, vec = hermitian_evd(sg[:, None] * a * sg[None, :])
    v = vec[:, 0] / sg
    v /= np.linalg.norm(v)
    return float(lam[0]), v


# Counted elementary kernels.  These are what the allocation metric uses, so
# its operation count can be audited with count_ops().

def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    m = a.shape[0] if a.ndim == 2 else 1
    k = a.shape[-1]
    n = b.shape[1] if b.ndim == 2 else 1
    _tally("matmul", 8 * m * k * n)
    return a @ b


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    nrhs = b.shape[1] if np.ndim(b) == 2 else 1
    _tally("solve", 8 * (n**3 // 3 + n**2 * nrhs))
    return np.linalg.solve(a, b)


def inv(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    _tally("inv", 8 * n**3)
    return np.linalg.inv(a)
