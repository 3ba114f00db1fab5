"""Quick invariant and oracle checks on small random instances.

Backs the ``ris-zf check`` command.  Each check compares a fast code path
against an independent dense computation and returns a short message.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from . import numerics
from .alloc import greedy_ris_lisa, lisa_direct
from .channel import ChannelRealization, ScenarioConfig, draw_realization
from .phase_opt import (
    elementwise_sweep,
    explicit_objective,
    relaxed_metric,
    singular_relaxed_step,
    waterfill,
)
from .zf_core import SubspaceCache, composite_matrix, frob_pinv_weighted, make_allocation

__all__ = ["random_realization", "run_checks", "CHECKS"]


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_realization(rng, n_bs, n_ris, n_users) -> ChannelRealization:
    """Unit-scale i.i.d. Gaussian instance with a random unit-norm ``b``."""
    b = _cn(rng, n_bs)
    b /= np.linalg.norm(b)
    return ChannelRealization(
        _cn(rng, n_users, n_bs), _cn(rng, n_users, n_ris), _cn(rng, n_ris), b
    )


def _unit_phases(rng, n):
    return np.exp(2j * np.pi * rng.uniform(size=n))


def check_inversion_lemma(rng, count=50):
    worst = 0.0
    for _ in range(count):
        real = random_realization(rng, 6, 16, 4)
        cache = SubspaceCache.from_realization(real)
        order = list(rng.permutation(4)[:3])
        alloc = make_allocation(cache, order)
        tb = np.append(_unit_phases(rng, 16), 1.0)
        g = rng.uniform(0.5, 2.0, size=3)
        fast = frob_pinv_weighted(alloc.c_mat, cache.d[order], tb, g)
        x = cache.d[order] @ tb
        dense = np.real(np.trace(np.linalg.inv(alloc.c_mat + np.outer(x, x.conj())) @ np.diag(g)))
        worst = max(worst, abs(fast - dense) / abs(dense))
    return worst <= 1e-8, f"max relative error {worst:.2e}"


def check_relaxed_metric(rng, count=30):
    worst = 0.0
    for _ in range(count):
        real = random_realization(rng, 6, 12, 4)
        cache = SubspaceCache.from_realization(real)
        order = [0, 1, 2]
        alloc = make_allocation(cache, order)
        metric, _ = relaxed_metric(alloc.c_mat, alloc.rr, 12)
        d = cache.d[order]
        cinv = np.linalg.inv(alloc.c_mat)
        m = d.conj().T @ cinv @ cinv @ d
        nmat = np.eye(13) / 13 + d.conj().T @ cinv @ d
        top = scipy.linalg.eigh(m, nmat, eigvals_only=True)[-1]
        oracle = np.real(np.trace(cinv)) - top
        worst = max(worst, abs(metric - oracle) / abs(oracle))
    return worst <= 1e-8, f"max relative error {worst:.2e}"


def check_interlacing(rng, count=20, draws=100):
    violations = 0
    for _ in range(count):
        real = random_realization(rng, 5, 8, 5)
        order = list(range(5))
        hd = real.h_direct
        lam_d = np.linalg.eigvalsh(hd @ hd.conj().T)[::-1]
        for _ in range(draws):
            h = composite_matrix(real, order, _unit_phases(rng, 8))
            lam = np.linalg.eigvalsh(h @ h.conj().T)[::-1]
            violations += int(np.sum(lam[1:] > lam_d[:-1] + 1e-9))
    return violations == 0, f"{violations} violations"


def check_waterfilling(rng, count=500):
    worst = 0.0
    for _ in range(count):
        gains = rng.exponential(size=rng.integers(1, 9))
        ptx = rng.uniform(0.01, 10.0)
        p = waterfill(gains, ptx)
        active = p > 0
        mu = np.mean(p[active] + 1 / gains[active])
        worst = max(worst, abs(p.sum() - ptx) / ptx,
                    np.max(np.abs(p[active] + 1 / gains[active] - mu)) / mu)
        if np.any(1 / gains[~active] < mu - 1e-10 * mu):
            return False, "inactive stream below the water level"
    return worst <= 1e-10, f"max KKT residual {worst:.2e}"


def check_sweep_monotone(rng, count=30):
    for _ in range(count):
        real = random_realization(rng, 6, 10, 3)
        cache = SubspaceCache.from_realization(real)
        alloc = make_allocation(cache, [0, 1, 2])
        d = cache.d[[0, 1, 2]]
        g = rng.uniform(0.5, 2.0, 3)
        tb = np.append(_unit_phases(rng, 10), 1.0)
        before = explicit_objective(alloc.c_mat, d, tb, g)
        after = explicit_objective(alloc.c_mat, d, elementwise_sweep(alloc.c_mat, d, tb, g), g)
        if after > before * (1 + 1e-12):
            return False, f"objective rose from {before} to {after}"
    return True, "objective never increased"


def check_singular_path(rng, count=10):
    worst = 0.0
    for _ in range(count):
        real = random_realization(rng, 4, 6, 4)
        cache = SubspaceCache.from_realization(real)
        alloc = make_allocation(cache, [0, 1, 2, 3])
        g = rng.uniform(0.5, 2.0, 4)
        obj, u, _ = singular_relaxed_step(alloc.c_mat, alloc.r_block, g, 6)
        x = alloc.r_block.conj().T @ u
        dense = np.real(np.trace(np.linalg.inv(alloc.c_mat + np.outer(x, x.conj())) @ np.diag(g)))
        worst = max(worst, abs(obj - dense) / abs(dense))
    return worst <= 1e-8, f"max relative error {worst:.2e}"


def check_dead_ris(rng, count=3):
    cfg = ScenarioConfig(n_ris=16)
    for t in range(count):
        real = draw_realization(cfg, int(rng.integers(2**31)), t).with_dead_ris()
        direct = lisa_direct(real, cfg.ptx_watts).se
        greedy = greedy_ris_lisa(real, cfg.ptx_watts).se
        if abs(direct - greedy) > 1e-9 * max(1.0, direct):
            return False, f"direct {direct} != greedy {greedy}"
    return True, "RIS algorithms reduce to the direct baseline"


def check_qr_subspace(rng, count=20):
    worst = 0.0
    for _ in range(count):
        real = random_realization(rng, 6, 20, 5)
        cache = SubspaceCache.from_realization(real)
        order = list(rng.permutation(5)[:3])
        d = cache.d[order]
        dense = d @ d.conj().T
        alloc = make_allocation(cache, order)
        worst = max(worst, np.linalg.norm(alloc.rr - dense) / np.linalg.norm(dense))
    return worst <= 1e-9, f"max relative error {worst:.2e}"


CHECKS = {
    "qr subspace compression": check_qr_subspace,
    "inversion lemma": check_inversion_lemma,
    "relaxed metric vs generalized eig": check_relaxed_metric,
    "eigenvalue interlacing": check_interlacing,
    "waterfilling KKT": check_waterfilling,
    "element-wise sweep monotone": check_sweep_monotone,
    "singular-C closed form": check_singular_path,
    "dead-RIS reduction": check_dead_ris,
}


def run_checks(seed: int = 0, out=print) -> bool:
    """Run every check; print one line each and return overall success."""
    ok_all = True
    for name, fn in CHECKS.items():
        rng = np.random.default_rng([seed, len(name)])
        try:
            ok, msg = fn(rng)
        except Exception as exc:  # report, keep checking
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {msg}")
    return ok_all
