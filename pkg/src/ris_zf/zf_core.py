"""Allocation-dependent matrices, zero-forcing precoders and sum-SE.

For an ordered user selection ``order`` the composite channel is

    H_c = H_cd + H_cr diag(theta) a b^H,

and, because the BS-RIS link is rank one with ``||b|| = 1``, its Gram matrix
splits as ``H_c H_c^H = C + (D theta_bar)(D theta_bar)^H`` with
``theta_bar = [theta; 1]``, ``C = H_cd (I - b b^H) H_cd^H`` and
``D = [H_cr diag(a), H_cd b]``.  A single QR of ``D^H`` over all users
(``D^H = Q R``) gives ``D_i D_i^H = R_i^H R_i`` for any selection, where
``R_i`` holds the selected columns of ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .channel import ChannelRealization
from .errors import DegenerateError, DimensionError, DomainError, RankError

__all__ = [
    "COND_LIMIT",
    "SubspaceCache",
    "Allocation",
    "PowerAllocation",
    "build_c",
    "build_d_columns",
    "make_allocation",
    "composite_matrix",
    "is_singular",
    "frob_pinv_weighted",
    "singular_frob_weighted",
    "pinv_column_gains",
    "zf_precoder",
    "sum_se",
    "sinr_sum_se",
]

# C_i is treated as singular beyond this condition number.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class PowerAllocation:
    """Per-stream channel gains and transmit powers under a total budget."""

    gains: np.ndarray
    powers: np.ndarray
    ptx: float

    def __post_init__(self):
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=float))
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float))
        if self.gains.shape != self.powers.shape:
            raise DimensionError("gains and powers must have the same length")

    @classmethod
    def empty(cls, ptx: float) -> "PowerAllocation":
        return cls(np.zeros(0), np.zeros(0), ptx)


@dataclass(frozen=True)
class SubspaceCache:
    """Per-realization precomputation shared by all allocation steps.

    ``d`` stacks the rows ``d_k^H = [h_{r,k}^H diag(a), h_{d,k}^H b]`` of all
    users, ``q, r`` is the thin QR of ``d^H`` and ``c_full`` is
    ``H_d (I - b b^H) H_d^H`` over all users, so ``C_i`` is a principal
    submatrix of it.
    """

    d: np.ndarray
    q: np.ndarray
    r: np.ndarray
    c_full: np.ndarray
    n_bs: int

    @classmethod
    def from_realization(cls, real: ChannelRealization) -> "SubspaceCache":
        d = build_d_columns(real)
        q, r = numerics.thin_qr(d.conj().T)
        c_full = build_c(real, range(real.n_users))
        return cls(d, q, r, c_full, real.n_bs)

    @property
    def n_users(self) -> int:
        return self.d.shape[0]

    @property
    def n_ris(self) -> int:
        return self.d.shape[1] - 1


@dataclass(frozen=True)
class Allocation:
    """Ordered user selection with its cached ``C_i`` and ``R_i`` blocks."""

    order: tuple
    c_mat: np.ndarray
    r_block: np.ndarray
    i_direct: int | None = None
    rr: np.ndarray = field(repr=False, default=None)

    @property
    def i(self) -> int:
        return len(self.order)


def make_allocation(cache: SubspaceCache, order, i_direct: int | None = None) -> Allocation:
    """Select the rows/columns of the cached matrices for ``order``."""
    order = tuple(int(k) for k in order)
    if len(set(order)) != len(order):
        raise DomainError(f"duplicate users in allocation {order}")
    idx = np.asarray(order, dtype=int)
    c_mat = cache.c_full[np.ix_(idx, idx)]
    r_block = cache.r[:, idx]
    rr = numerics.matmul(r_block.conj().T, r_block)
    return Allocation(order, c_mat, r_block, i_direct, rr)


def build_c(real: ChannelRealization, order) -> np.ndarray:
    """``C_i = H_cd (I - b b^H) H_cd^H`` for the users in ``order``."""
    h = real.h_direct[list(order)]
    hb = h @ real.b
    c = h @ h.conj().T - np.outer(hb, hb.conj())
    return 0.5 * (c + c.conj().T)


def build_d_columns(real: ChannelRealization) -> np.ndarray:
    """Stack ``[h_{r,k}^H diag(a), h_{d,k}^H b]`` over all users, shape ``(K, N_R + 1)``."""
    if real.n_ris + 1 < real.n_users:
        raise DimensionError(
            f"N_R + 1 >= K is required for an orthonormal Q (N_R={real.n_ris}, K={real.n_users})"
        )
    return np.hstack([real.h_ris_user * real.a[None, :], (real.h_direct @ real.b)[:, None]])


def composite_matrix(real: ChannelRealization, order, theta) -> np.ndarray:
    """Composite channel ``H_cd + H_cr diag(theta) a b^H`` of the users in ``order``."""
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (real.n_ris,):
        raise DimensionError(f"theta must have length {real.n_ris}")
    if theta.size and np.max(np.abs(np.abs(theta) - 1.0)) > 1e-12:
        raise DomainError("RIS phases must be unit-modulus")
    order = list(order)
    g = real.h_ris_user[order] @ (theta * real.a)
    return real.h_direct[order] + np.outer(g, real.b.conj())


def is_singular(c_mat: np.ndarray) -> bool:
    """True when ``C`` has condition number above :data:`COND_LIMIT`."""
    ev = np.linalg.eigvalsh(0.5 * (c_mat + c_mat.conj().T))
    top = ev[-1]
    return top <= 0.0 or ev[0] <= top / COND_LIMIT


def frob_pinv_weighted(c_mat, d_mat, theta_bar, weights=None) -> float:
    """``tr((C + x x^H)^{-1} diag(weights))`` with ``x = d_mat @ theta_bar``.

    Evaluated with the matrix inversion lemma.  With unit weights this is
    the squared Frobenius norm of the composite channel's pseudoinverse.
    Singular ``C`` is delegated to :func:`singular_frob_weighted`.
    """
    c_mat = np.asarray(c_mat, dtype=complex)
    x = np.asarray(d_mat) @ np.asarray(theta_bar)
    i = c_mat.shape[0]
    wts = np.ones(i) if weights is None else np.asarray(weights, dtype=float)
    if np.any(wts <= 0):
        raise DomainError("weights must be positive")
    if is_singular(c_mat):
        return singular_frob_weighted(c_mat, x, wts)
    cinv = np.linalg.inv(c_mat)
    cx = cinv @ x
    num = np.real(np.vdot(cx, wts * cx))
    den = 1.0 + np.real(np.vdot(x, cx))
    return float(np.real(np.sum(np.diag(cinv) * wts)) - num / den)


def singular_frob_weighted(c_mat, x, weights) -> float:
    """Weighted trace of ``(C + x x^H)^{-1}`` when ``C`` has one null direction.

    Uses ``tr(Ct^+) + (1 + y^H Ct^+ y) / |w^H y|^2`` with the scaled
    ``Ct = G^{-1/2} C G^{-1/2}``, ``y = G^{-1/2} x`` and ``w`` spanning the
    null space of ``Ct``.  Returns ``inf`` if ``y`` has no null-space
    component.
    """
    wts = np.asarray(weights, dtype=float)
    s = 1.0 / np.sqrt(wts)
    ct = s[:, None] * np.asarray(c_mat) * s[None, :]
    ct_pinv, w = _pinv_with_null(ct)
    y = s * np.asarray(x)
    wy = np.vdot(w, y)
    if abs(wy) ** 2 <= 1e-300:
        return float("inf")
    return float(
        np.real(np.trace(ct_pinv)) + (1.0 + np.real(np.vdot(y, ct_pinv @ y))) / abs(wy) ** 2
    )


def _pinv_with_null(ct: np.ndarray, rtol: float = 1e-10):
    """Pseudoinverse and the single null vector of a PSD matrix.

    Eigenvalues below ``rtol * trace`` count as zero; anything other than
    exactly one such eigenvalue raises :class:`DegenerateError`.
    """
    lam, vec = numerics.hermitian_evd(ct)
    tr = float(np.sum(np.abs(lam)))
    zero = lam <= rtol * tr
    if tr == 0.0:
        zero = np.ones_like(lam, dtype=bool)
    if np.count_nonzero(zero) != 1:
        raise DegenerateError(
            f"expected one null direction, found {np.count_nonzero(zero)}"
        )
    keep = ~zero
    vk = vec[:, keep]
    ct_pinv = numerics.matmul(vk / lam[keep], vk.conj().T)
    return ct_pinv, vec[:, zero][:, 0]


def pinv_column_gains(h_c: np.ndarray) -> np.ndarray:
    """``1 / ||H^+ e_j||^2`` for each row ``j`` of a full-row-rank channel."""
    h_pinv = _checked_pinv(h_c)
    return 1.0 / np.sum(np.abs(h_pinv) ** 2, axis=0)


def _checked_pinv(h_c: np.ndarray) -> np.ndarray:
    h_c = np.atleast_2d(np.asarray(h_c, dtype=complex))
    s = np.linalg.svd(h_c, compute_uv=False)
    if s.size < h_c.shape[0] or s[0] == 0.0 or s[-1] <= 1e-10 * s[0]:
        raise RankError("composite channel is not of full row rank")
    return numerics.pseudoinverse(h_c)


def zf_precoder(h_c, power: PowerAllocation) -> np.ndarray:
    """Zero-forcing precoder ``H^+ Lambda^(1/2) Gamma^(1/2)``.

    ``Lambda`` normalizes the pseudoinverse columns to unit norm, so the
    precoder's squared Frobenius norm equals the total allocated power and
    ``H @ P`` is diagonal with entries ``sqrt(lambda_j gamma_j)``.
    """
    h_pinv = _checked_pinv(h_c)
    gains = 1.0 / np.sum(np.abs(h_pinv) ** 2, axis=0)
    powers = np.asarray(power.powers, dtype=float)
    if powers.shape != gains.shape:
        raise DimensionError("one power per allocated user is required")
    return h_pinv * np.sqrt(gains * powers)[None, :]


def sum_se(power: PowerAllocation | np.ndarray, powers=None) -> float:
    """Sum spectral efficiency ``sum_j log2(1 + lambda_j gamma_j)`` in bit/s/Hz.

    Accepts either a :class:`PowerAllocation` or ``(gains, powers)``.
    """
    if isinstance(power, PowerAllocation):
        gains, powers = power.gains, power.powers
    else:
        gains = np.asarray(power, dtype=float)
        powers = np.asarray(powers, dtype=float)
    snr = gains * powers
    if np.any(snr < 0):
        raise DomainError("negative per-stream SNR")
    return float(np.sum(np.log2(1.0 + snr)))


def sinr_sum_se(h_c: np.ndarray, precoder: np.ndarray) -> float:
    """Sum-SE from per-user SINRs of an arbitrary linear precoder (unit noise)."""
    g = np.abs(np.asarray(h_c) @ np.asarray(precoder)) ** 2
    sig = np.diag(g)
    interference = g.sum(axis=1) - sig
    return float(np.sum(np.log2(1.0 + sig / (1.0 + interference))))
