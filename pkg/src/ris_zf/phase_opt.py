"""RIS phase optimization and power allocation.

Two regimes are covered.  During user allocation the phase vector is
relaxed to the sphere ``||theta_tilde||^2 = N_R + 1`` and written as
``theta_tilde = Q u``; every step then lives in the K-dimensional subspace
spanned by ``Q`` and reduces to a Hermitian eigenproblem.  For the final
design the unit-modulus constraint is restored and the phases are updated
one element at a time in closed form, alternating with waterfilling.

All objectives are weighted traces ``tr((C + x x^H)^{-1} diag(g))`` with
``x = D_i theta_bar``; for fixed powers, minimizing this trace with
``g = lambda_prev * gamma`` finds phases that reach the same sum-SE with
less power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import DegenerateError, DomainError
from .zf_core import (
    Allocation,
    PowerAllocation,
    SubspaceCache,
    _pinv_with_null,
    frob_pinv_weighted,
    is_singular,
    make_allocation,
    sum_se,
)

__all__ = [
    "PhaseState",
    "EvalState",
    "EvalResult",
    "FinalResult",
    "waterfill",
    "relaxed_metric",
    "singular_relaxed_metric",
    "allocation_metric",
    "subspace_eval_step",
    "recover_u",
    "singular_relaxed_step",
    "project_theta",
    "elementwise_sweep",
    "explicit_objective",
    "gains_explicit",
    "evaluate_allocation",
    "finalize_phases",
]


@dataclass
class PhaseState:
    """RIS phases in relaxed subspace form (``u``) and/or explicit form."""

    mode: str
    u: np.ndarray | None = None
    theta_bar: np.ndarray | None = None
    v: np.ndarray | None = None


@dataclass
class EvalState:
    gains_prev: np.ndarray
    gamma_tilde: np.ndarray
    se: float
    iteration: int


@dataclass
class EvalResult:
    """Outcome of the relaxed alternating optimization for one allocation."""

    se: float
    allocation: Allocation
    state: EvalState
    power: PowerAllocation
    phase: PhaseState
    history: list = field(default_factory=list)


@dataclass
class FinalResult:
    theta: np.ndarray
    allocation: Allocation
    power: PowerAllocation
    se: float
    iterations: int
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Power allocation


def waterfill(gains, ptx: float) -> np.ndarray:
    """Waterfilling powers ``max(0, mu - 1/lambda_j)`` summing to ``ptx``."""
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        return np.zeros(0)
    if np.any(gains <= 0) or not ptx > 0:
        raise DomainError("waterfilling needs positive gains and budget")
    inv_g = 1.0 / gains
    order = np.argsort(inv_g)
    sorted_inv = inv_g[order]
    csum = np.cumsum(sorted_inv)
    m = np.arange(1, gains.size + 1)
    levels = (ptx + csum) / m
    # the active set is the longest prefix whose water level clears its floor
    active = np.nonzero(levels > sorted_inv)[0][-1] + 1
    mu = levels[active - 1]
    return np.maximum(0.0, mu - inv_g)


# ---------------------------------------------------------------------------
# Relaxed (spectral-norm) subproblems in the QR subspace


def _a_matrix(c_mat: np.ndarray, rr: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``C^{-1}`` and ``A = C^{-1} - (C + n RR)^{-1}``, the latter as ``C^{-1} B (C + B)^{-1}``."""
    cinv = numerics.inv(c_mat)
    b = n * rr
    a = numerics.matmul(cinv, numerics.matmul(b, numerics.inv(c_mat + b)))
    return cinv, 0.5 * (a + a.conj().T)


def relaxed_metric(c_mat, rr, n_ris: int) -> tuple[float, np.ndarray]:
    """Allocation metric ``tr(C^{-1}) - lambda_max(A)`` for invertible ``C``.

    This is the minimum of ``||H_c^+||_F^2`` over relaxed phase vectors.
    Returns the metric and ``A``.
    """
    c_mat = np.asarray(c_mat, dtype=complex)
    cinv, a = _a_matrix(c_mat, np.asarray(rr, dtype=complex), n_ris + 1)
    lam = numerics.hermitian_evd(a).eigenvalues
    if lam[-1] < -1e-9 * max(1.0, abs(lam[0])):
        raise DegenerateError("A is not positive semidefinite")
    return float(np.real(np.trace(cinv)) - lam[0]), a


def _singular_solve(c_mat, r_block, gamma_tilde, n: int):
    """Closed-form relaxed optimum when ``C`` has one null direction.

    Works in the scaled coordinates ``Ct = G^{-1/2} C G^{-1/2}`` and
    ``E = G^{-1/2} R_i^H`` (the subspace image of ``G^{-1/2} D_i``).
    Returns ``(objective, u)``; ``u`` is ``None`` when the RIS cannot reach
    the null direction, in which case the objective is infinite.
    """
    s = 1.0 / np.sqrt(np.asarray(gamma_tilde, dtype=float))
    ct = s[:, None] * c_mat * s[None, :]
    ct_pinv, w = _pinv_with_null(ct)
    e = s[:, None] * np.asarray(r_block).conj().T
    z = numerics.matmul(e.conj().T, w)
    if np.linalg.norm(z) <= 1e-12 * max(np.linalg.norm(e), 1e-300):
        return float("inf"), None
    k = e.shape[1]
    nmat = np.eye(k) / n + numerics.matmul(e.conj().T, numerics.matmul(ct_pinv, e))
    t = numerics.solve(nmat, z)
    quad = float(np.real(np.vdot(z, t)))
    u = t / np.linalg.norm(t) * math.sqrt(n)
    return float(np.real(np.trace(ct_pinv))) + 1.0 / quad, u


def singular_relaxed_metric(c_mat, r_block, n_ris: int) -> float:
    """Unweighted relaxed metric for singular ``C`` (selection at ``i = N_B``)."""
    i = np.asarray(c_mat).shape[0]
    return _singular_solve(np.asarray(c_mat, dtype=complex), r_block, np.ones(i), n_ris + 1)[0]


def allocation_metric(alloc: Allocation, n_ris: int) -> float:
    """Relaxed ``||H_c^+||_F^2`` lower-bound metric of an allocation."""
    if is_singular(alloc.c_mat):
        return singular_relaxed_metric(alloc.c_mat, alloc.r_block, n_ris)
    return relaxed_metric(alloc.c_mat, alloc.rr, n_ris)[0]


def subspace_eval_step(c_mat, rr, gamma_tilde, n_ris: int):
    """Relaxed phase step for fixed weights ``gamma_tilde``.

    Returns ``(objective, gains, v, mu)`` where the objective is
    ``tr(C^{-1} G) - lambda_max(A G)``, ``v`` the unit principal eigenvector
    of ``A G`` and ``mu`` its eigenvalue.  The gains are the diagonal of the
    Gram inverse at the relaxed optimum,

        1 / lambda_j = [C^{-1}]_jj - mu |v_j|^2 / (v^H G v),

    which coincides with ``[C^{-1} - v v^H A]_jj`` whenever ``G`` is a
    multiple of the identity.
    """
    c_mat = np.asarray(c_mat, dtype=complex)
    g = np.asarray(gamma_tilde, dtype=float)
    cinv, a = _a_matrix(c_mat, np.asarray(rr, dtype=complex), n_ris + 1)
    mu, v = numerics.principal_eigpair_psd_weighted(a, g)
    mu = max(mu, 0.0)
    objective = float(np.real(np.sum(np.diag(cinv) * g))) - mu
    kappa = mu / float(np.real(np.vdot(v, g * v)))
    inv_gain = np.real(np.diag(cinv)) - kappa * np.abs(v) ** 2
    if np.any(inv_gain <= 0) or not np.all(np.isfinite(inv_gain)):
        raise DegenerateError("non-positive channel gain in relaxed step")
    return objective, 1.0 / inv_gain, v, mu


def recover_u(c_mat, r_block, gamma_tilde, v, n_ris: int) -> np.ndarray:
    """Subspace coordinates of the relaxed optimum, scaled to norm ``sqrt(N_R + 1)``."""
    n = n_ris + 1
    r_block = np.asarray(r_block)
    rr = r_block.conj().T @ r_block
    y = np.linalg.solve(np.asarray(c_mat) + n * rr, np.asarray(gamma_tilde) * np.asarray(v))
    u = r_block @ y
    norm = np.linalg.norm(u)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateError("relaxed phase direction vanished")
    return u / norm * math.sqrt(n)


def singular_relaxed_step(c_mat, r_block, gamma_tilde, n_ris: int):
    """Relaxed phase step for singular ``C``; returns ``(objective, u, gains)``.

    Raises :class:`DegenerateError` if the RIS cannot fill the null
    direction (infinite objective) or ``C`` has several null directions.
    """
    c_mat = np.asarray(c_mat, dtype=complex)
    objective, u = _singular_solve(c_mat, r_block, gamma_tilde, n_ris + 1)
    if u is None:
        raise DegenerateError("RIS path is orthogonal to the null space of C")
    x = np.asarray(r_block).conj().T @ u
    gains = _gram_gains(c_mat, x)
    return objective, u, gains


def _gram_gains(c_mat, x) -> np.ndarray:
    gram = c_mat + np.outer(x, x.conj())
    try:
        inv_diag = np.real(np.diag(np.linalg.inv(gram)))
    except np.linalg.LinAlgError as exc:
        raise DegenerateError("composite Gram matrix is singular") from exc
    if np.any(inv_diag <= 0) or not np.all(np.isfinite(inv_diag)):
        raise DegenerateError("non-positive channel gain")
    return 1.0 / inv_diag


# ---------------------------------------------------------------------------
# Unit-modulus phases


def project_theta(q_mat, u) -> np.ndarray:
    """Unit-modulus projection of ``Q u``, rotated so the last entry is 1."""
    t = np.exp(1j * np.angle(np.asarray(q_mat) @ np.asarray(u)))
    return t * np.conj(t[-1])


def explicit_objective(c_mat, d_rows, theta_bar, gamma_tilde) -> float:
    """``tr((C + D theta_bar theta_bar^H D^H)^{-1} diag(gamma_tilde))``."""
    return frob_pinv_weighted(c_mat, d_rows, theta_bar, gamma_tilde)


def _best_phase(alpha, beta, gamma, delta, z0, maximize):
    """Optimal unit-modulus ``z`` for ``(alpha + 2Re(beta z)) / (gamma + 2Re(delta z))``.

    Stationarity on the unit circle reduces to
    ``Im(c z) = -2 Im(beta conj(delta))`` with ``c = beta gamma - alpha delta``,
    which has two roots; the better root is returned unless it does not
    improve on the current value ``z0``.
    """

    def ratio(z):
        den = gamma + 2.0 * (delta * z).real
        num = alpha + 2.0 * (beta * z).real
        if den <= 0.0:
            return math.inf if num > 0 else -math.inf
        return num / den

    c = beta * gamma - alpha * delta
    mag = abs(c)
    best_z, best_r = z0, ratio(z0)
    if mag == 0.0:
        return best_z, best_r
    t = -2.0 * (beta * delta.conjugate()).imag / mag
    t = min(1.0, max(-1.0, t))
    base = math.asin(t)
    psi = math.atan2(c.imag, c.real)
    for phi in (base - psi, math.pi - base - psi):
        z = complex(math.cos(phi), math.sin(phi))
        r = ratio(z)
        if (r > best_r) if maximize else (r < best_r):
            best_z, best_r = z, r
    return best_z, best_r


def elementwise_sweep(c_mat, d_rows, theta_bar, gamma_tilde, sweeps: int = 1) -> np.ndarray:
    """Closed-form per-element phase updates over all RIS elements.

    Each element is set to its exact minimizer of the weighted trace
    objective with the others held fixed, so the objective never increases.
    The last entry of ``theta_bar`` (the direct-path coordinate) stays 1.
    """
    c_mat = np.asarray(c_mat, dtype=complex)
    d = np.asarray(d_rows, dtype=complex)
    th = np.array(theta_bar, dtype=complex)
    g = np.asarray(gamma_tilde, dtype=float)
    n_el = th.size - 1
    if is_singular(c_mat):
        _singular_sweep(c_mat, d, th, g, n_el, sweeps)
    else:
        _regular_sweep(c_mat, d, th, g, n_el, sweeps)
    th[-1] = 1.0
    return th


def _regular_sweep(c_mat, d, th, g, n_el, sweeps):
    # maximize x^H P x / (1 + x^H C^{-1} x),  P = C^{-1} G C^{-1}
    cinv = np.linalg.inv(c_mat)
    cinv = 0.5 * (cinv + cinv.conj().T)
    p = cinv @ (g[:, None] * cinv)
    pd = p @ d
    cd = cinv @ d
    dpd = np.real(np.sum(d.conj() * pd, axis=0)).tolist()
    dcd = np.real(np.sum(d.conj() * cd, axis=0)).tolist()
    # row n holds (P d_n)^H and (C^{-1} d_n)^H, so proj[n] @ x gives both forms
    proj = np.stack([pd.conj().T, cd.conj().T], axis=1)
    cols = d.T.copy()
    x = d @ th
    xpx = float(np.vdot(x, p @ x).real)
    xcx = float(np.vdot(x, cinv @ x).real)
    for _ in range(sweeps):
        for n in range(n_el):
            z0 = complex(th[n])
            a_n, b_n = (proj[n] @ x).tolist()
            z0c = z0.conjugate()
            alpha = xpx - 2.0 * (z0c * a_n).real + 2.0 * dpd[n]
            beta = a_n.conjugate() - z0c * dpd[n]
            gamma = 1.0 + xcx - 2.0 * (z0c * b_n).real + 2.0 * dcd[n]
            delta = b_n.conjugate() - z0c * dcd[n]
            z, _ = _best_phase(alpha, beta, gamma, delta, z0, maximize=True)
            if z != z0:
                th[n] = z
                x = x + (z - z0) * cols[n]
                xpx = alpha + 2.0 * (beta * z).real
                xcx = gamma + 2.0 * (delta * z).real - 1.0


def _singular_sweep(c_mat, d, th, g, n_el, sweeps):
    # minimize (1 + y^H Ct^+ y) / |w^H y|^2,  y = G^{-1/2} D theta_bar
    s_g = 1.0 / np.sqrt(g)
    ct = s_g[:, None] * c_mat * s_g[None, :]
    p, w = _pinv_with_null(ct)
    e = s_g[:, None] * d
    pe = p @ e
    epe = np.real(np.sum(e.conj() * pe, axis=0)).tolist()
    we = (w.conj() @ e).tolist()
    proj = pe.conj().T.copy()
    cols = e.T.copy()
    y = e @ th
    ypy = float(np.vdot(y, p @ y).real)
    wy = complex(np.vdot(w, y))
    for _ in range(sweeps):
        for n in range(n_el):
            z0 = complex(th[n])
            z0c = z0.conjugate()
            a_n = complex(proj[n] @ y)
            ws = wy - z0 * we[n]
            alpha = 1.0 + ypy - 2.0 * (z0c * a_n).real + 2.0 * epe[n]
            beta = a_n.conjugate() - z0c * epe[n]
            gamma = abs(ws) ** 2 + abs(we[n]) ** 2
            delta = ws.conjugate() * we[n]
            z, _ = _best_phase(alpha, beta, gamma, delta, z0, maximize=False)
            if z != z0:
                th[n] = z
                y = y + (z - z0) * cols[n]
                ypy = alpha + 2.0 * (beta * z).real - 1.0
                wy = ws + z * we[n]


def gains_explicit(c_mat, d_rows, theta_bar) -> np.ndarray:
    """ZF channel gains ``1 / [(C + x x^H)^{-1}]_jj`` at ``x = D theta_bar``.

    Uses the Sherman-Morrison form for invertible ``C`` and a direct inverse
    of the small Gram matrix otherwise.
    """
    c_mat = np.asarray(c_mat, dtype=complex)
    x = np.asarray(d_rows) @ np.asarray(theta_bar)
    if is_singular(c_mat):
        return _gram_gains(c_mat, x)
    cinv = np.linalg.inv(c_mat)
    cx = cinv @ x
    inv_diag = np.real(np.diag(cinv)) - np.abs(cx) ** 2 / (1.0 + np.vdot(x, cx).real)
    if np.any(inv_diag <= 0):
        raise DegenerateError("non-positive channel gain")
    return 1.0 / inv_diag


# ---------------------------------------------------------------------------
# Alternating optimization drivers


def _relaxed_iterate(alloc: Allocation, gt: np.ndarray, n_ris: int):
    if is_singular(alloc.c_mat):
        obj, u, gains = singular_relaxed_step(alloc.c_mat, alloc.r_block, gt, n_ris)
        return obj, gains, None, u
    obj, gains, v, _ = subspace_eval_step(alloc.c_mat, alloc.rr, gt, n_ris)
    return obj, gains, v, None


def evaluate_allocation(
    cache: SubspaceCache,
    order,
    ptx: float,
    *,
    tol: float = 1e-8,
    max_iter: int = 500,
    i_direct: int | None = None,
) -> EvalResult:
    """Relaxed joint phase/power optimization of an allocation.

    Alternates the subspace phase step with waterfilling, starting from the
    equal-power weights ``(ptx / i) I``.  Users that waterfilling leaves
    without power are removed and the optimization restarts for the
    survivors.  An iterate that lowers the sum-SE is never accepted.
    """
    order = list(order.order if isinstance(order, Allocation) else order)
    if not order:
        raise DomainError("cannot evaluate an empty allocation")
    result, dropped = _run_relaxed_ao(cache, order, ptx, tol, max_iter, i_direct)
    while dropped is not None:
        order = [k for k, off in zip(order, dropped) if not off]
        if not order:
            break
        try:
            smaller, dropped = _run_relaxed_ao(cache, order, ptx, tol, max_iter, i_direct)
        except DegenerateError:
            break
        if result is None or smaller is not None and smaller.se >= result.se:
            result = smaller
    if result is None:
        raise DegenerateError("no user of the allocation could be served")
    return result


def _run_relaxed_ao(cache, order, ptx, tol, max_iter, i_direct):
    """One alternating-optimization run on a fixed user set.

    Returns ``(best accepted result or None, mask of unpowered users or None)``.
    """
    n_ris = cache.n_ris
    alloc = make_allocation(cache, order, i_direct)
    i = alloc.i
    gt = np.full(i, ptx / i)
    best = None
    history = []
    dropped = None
    for it in range(max_iter):
        try:
            _, gains, v, u = _relaxed_iterate(alloc, gt, n_ris)
        except DegenerateError:
            if best is None:
                raise
            break
        powers = waterfill(gains, ptx)
        if np.any(powers <= 0):
            dropped = powers <= 0
            break
        se = sum_se(gains, powers)
        if best is not None and se < best[0]:
            break
        history.append(se)
        best = (se, gains, powers, gt, v, u, it)
        if len(history) > 1 and se - history[-2] <= tol * max(abs(se), 1.0):
            break
        gt = gains * powers
    if best is None:
        return None, dropped

    se, gains, powers, gt_used, v, u, it = best
    if u is None:
        try:
            u = recover_u(alloc.c_mat, alloc.r_block, gt_used, v, n_ris)
        except DegenerateError:
            # the RIS does not reach these users, so every phase is optimal
            u = np.zeros(cache.r.shape[0], dtype=complex)
            u[0] = math.sqrt(n_ris + 1)
    state = EvalState(gains_prev=gains, gamma_tilde=gains * powers, se=se, iteration=it)
    phase = PhaseState("relaxed-subspace", u=u, v=v)
    result = EvalResult(se, alloc, state, PowerAllocation(gains, powers, ptx), phase, history)
    return result, dropped


def finalize_phases(
    cache: SubspaceCache,
    evaluation: EvalResult,
    ptx: float,
    *,
    tol: float = 1e-6,
    max_iter: int = 200,
    sweeps: int = 1,
) -> FinalResult:
    """Unit-modulus phase design for an evaluated allocation.

    Starts from the projection of the relaxed optimum and alternates
    element-wise phase sweeps (weighted by ``lambda_prev * gamma``) with
    waterfilling on the exact ZF gains until the sum-SE settles.
    """
    order = list(evaluation.allocation.order)
    theta_bar = project_theta(cache.q, evaluation.phase.u)
    gt = np.array(evaluation.state.gamma_tilde, dtype=float)

    alloc = make_allocation(cache, order)
    d_rows = cache.d[order]
    gains = gains_explicit(alloc.c_mat, d_rows, theta_bar)
    powers = waterfill(gains, ptx)
    se = sum_se(gains, powers)
    history = [se]
    it = 0
    for it in range(1, max_iter + 1):
        cand = elementwise_sweep(alloc.c_mat, d_rows, theta_bar, gt, sweeps)
        try:
            g_new = gains_explicit(alloc.c_mat, d_rows, cand)
        except DegenerateError:
            break
        p_new = waterfill(g_new, ptx)
        off = p_new <= 0
        if np.any(off) and not np.all(off):
            # drop unpowered users and re-solve the smaller allocation
            keep = ~off
            order = [k for k, o in zip(order, keep) if o]
            alloc = make_allocation(cache, order)
            d_rows = cache.d[order]
            theta_bar = cand
            gains = gains_explicit(alloc.c_mat, d_rows, theta_bar)
            powers = waterfill(gains, ptx)
            se = sum_se(gains, powers)
            gt = gains * powers
            history.append(se)
            continue
        se_new = sum_se(g_new, p_new)
        if se_new < se:
            break
        improvement = se_new - se
        theta_bar, gains, powers, se = cand, g_new, p_new, se_new
        history.append(se)
        if improvement < tol:
            break
        gt = gains * powers

    return FinalResult(
        theta=theta_bar[:-1].copy(),
        allocation=alloc,
        power=PowerAllocation(gains, powers, ptx),
        se=se,
        iterations=it,
        history=history,
    )
