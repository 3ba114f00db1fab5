"""User-allocation algorithms.

``direct``   greedy ZF allocation (LISA-style) on the direct channel only.
``random``   the same allocation on the composite channel with random phases.
``greedy``   complete greedy search with the RIS (Greedy-RIS-LISA).
``addone``   two-candidate search around the direct allocation (AddOne-RIS-LISA).

The two RIS algorithms choose users with the relaxed metric in the QR
subspace, design unit-modulus phases for the chosen set and finally run
the direct greedy ZF allocation on the resulting composite channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, trial_rng
from .errors import DegenerateError, SelectionError
from .phase_opt import (
    EvalResult,
    allocation_metric,
    evaluate_allocation,
    finalize_phases,
    waterfill,
)
from .zf_core import (
    COND_LIMIT,
    PowerAllocation,
    SubspaceCache,
    composite_matrix,
    make_allocation,
    sum_se,
)

__all__ = [
    "ALGORITHMS",
    "AlgorithmResult",
    "select_next_user",
    "lisa",
    "lisa_direct",
    "greedy_ris_lisa",
    "add_one_ris_lisa",
    "random_phase_baseline",
    "random_phases",
    "run_algorithm",
]

ALGORITHMS = ("direct", "random", "greedy", "addone")


@dataclass
class AlgorithmResult:
    algorithm: str
    order: tuple
    theta: np.ndarray | None
    power: PowerAllocation
    se: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return len(self.order)


def select_next_user(cache: SubspaceCache, order, candidates) -> tuple[int, float]:
    """Candidate minimizing the relaxed pseudoinverse-norm metric.

    Only ``C_i`` and ``R_i`` blocks of the cache are touched, so the cost
    does not depend on the number of RIS elements.  Ties go to the lowest
    user index.
    """
    order = list(order)
    best_user, best_metric = None, np.inf
    for k in sorted(candidates):
        try:
            metric = allocation_metric(make_allocation(cache, order + [k]), cache.n_ris)
        except (DegenerateError, np.linalg.LinAlgError):
            continue
        if np.isfinite(metric) and metric < best_metric:
            best_user, best_metric = k, metric
    if best_user is None:
        raise SelectionError("no candidate gives a finite allocation metric")
    return best_user, float(best_metric)


def _gram_metric(h: np.ndarray) -> float:
    gram = h @ h.conj().T
    ev = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    if ev[-1] <= 0 or ev[0] <= ev[-1] / COND_LIMIT:
        return np.inf
    return float(np.real(np.trace(np.linalg.inv(gram))))


def _zf_waterfill(h: np.ndarray, ptx: float):
    gram = h @ h.conj().T
    gains = 1.0 / np.real(np.diag(np.linalg.inv(gram)))
    powers = waterfill(gains, ptx)
    return gains, powers, sum_se(gains, powers)


def lisa(h: np.ndarray, ptx: float, candidates=None) -> tuple[tuple, PowerAllocation, float]:
    """Greedy ZF allocation with waterfilling on a fixed channel ``h`` (rows = users).

    Each step adds the user minimizing ``||H^+||_F^2`` of the enlarged set;
    the allocation stops once the waterfilled sum-SE no longer increases.
    Users left without power are dropped from the returned allocation.
    """
    k_all, n_bs = h.shape
    remaining = sorted(range(k_all) if candidates is None else candidates)
    order: list[int] = []
    best = ((), PowerAllocation.empty(ptx), 0.0)
    while remaining and len(order) < n_bs:
        metrics = [_gram_metric(h[order + [k]]) for k in remaining]
        j = int(np.argmin(metrics))
        if not np.isfinite(metrics[j]):
            break
        trial = order + [remaining[j]]
        gains, powers, se = _zf_waterfill(h[trial], ptx)
        if se <= best[2]:
            break
        order = trial
        remaining.pop(j)
        best = (tuple(order), PowerAllocation(gains, powers, ptx), se)

    order_t, power, se = best
    if power.powers.size and np.any(power.powers <= 0):
        kept = [k for k, p in zip(order_t, power.powers) if p > 0]
        gains, powers, se_kept = _zf_waterfill(h[kept], ptx)
        if se_kept >= se:
            order_t, power, se = tuple(kept), PowerAllocation(gains, powers, ptx), se_kept
    return order_t, power, se


def lisa_direct(real: ChannelRealization, ptx: float) -> AlgorithmResult:
    """Direct-channel baseline; ``len(result.order)`` is ``i_D``."""
    order, power, se = lisa(real.h_direct, ptx)
    return AlgorithmResult("direct", order, None, power, se, {"i_direct": len(order)})


def random_phases(n_ris: int, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n_ris))


def random_phase_baseline(real: ChannelRealization, ptx: float, seed) -> AlgorithmResult:
    """Greedy ZF allocation on the composite channel with uniform random phases."""
    theta = random_phases(real.n_ris, seed)
    h = composite_matrix(real, range(real.n_users), theta)
    order, power, se = lisa(h, ptx)
    return AlgorithmResult("random", order, theta, power, se)


def _finish(name: str, real, cache, ptx, evaluation: EvalResult, diag: dict) -> AlgorithmResult:
    final = finalize_phases(cache, evaluation, ptx)
    h = composite_matrix(real, range(real.n_users), final.theta)
    order, power, se = lisa(h, ptx)
    diag = dict(diag)
    diag.update(
        ris_order=evaluation.allocation.order,
        relaxed_se=evaluation.se,
        finalized_se=final.se,
        finalize_iterations=final.iterations,
    )
    return AlgorithmResult(name, order, final.theta, power, se, diag)


def _empty_result(name: str, real, ptx, diag) -> AlgorithmResult:
    theta = np.ones(real.n_ris, dtype=complex)
    h = composite_matrix(real, range(real.n_users), theta)
    order, power, se = lisa(h, ptx)
    return AlgorithmResult(name, order, theta, power, se, diag)


def greedy_ris_lisa(
    real: ChannelRealization, ptx: float, cache: SubspaceCache | None = None
) -> AlgorithmResult:
    """Complete greedy search: add users until the relaxed sum-SE stops growing."""
    cache = cache or SubspaceCache.from_realization(real)
    k_all = real.n_users
    order: list[int] = []
    accepted: EvalResult | None = None
    steps = []
    while len(order) < min(real.n_bs, k_all):
        candidates = [k for k in range(k_all) if k not in order]
        try:
            user, metric = select_next_user(cache, order, candidates)
            ev = evaluate_allocation(cache, order + [user], ptx)
        except (SelectionError, DegenerateError):
            break
        prev_se = accepted.se if accepted else 0.0
        grown = set(ev.allocation.order) - set(order)
        ok = ev.se > prev_se and bool(grown)
        steps.append((user, metric, ev.se, ok))
        if not ok:
            break
        accepted = ev
        order = list(ev.allocation.order)

    diag = {"steps": steps}
    if accepted is None:
        return _empty_result("greedy", real, ptx, diag)
    return _finish("greedy", real, cache, ptx, accepted, diag)


def add_one_ris_lisa(
    real: ChannelRealization, ptx: float, cache: SubspaceCache | None = None
) -> AlgorithmResult:
    """Check only allocations with ``i_D`` and ``i_D + 1`` users.

    Candidate A swaps the last direct-channel user for the best RIS-aware
    choice, candidate B adds one RIS-aware user on top of the direct
    allocation.  Both are evaluated with the relaxed subspace optimization
    and the better one gets the unit-modulus phase design.
    """
    cache = cache or SubspaceCache.from_realization(real)
    direct = lisa_direct(real, ptx)
    base = list(direct.order)
    i_d = len(base)
    k_all = real.n_users
    diag = {"i_direct": i_d}

    if i_d == 0:
        res = greedy_ris_lisa(real, ptx, cache)
        res.algorithm = "addone"
        res.diagnostics.update(diag)
        return res

    candidates = []
    head = base[:-1]
    try:
        user_a, _ = select_next_user(cache, head, [k for k in range(k_all) if k not in head])
        candidates.append(("A", head + [user_a]))
    except SelectionError:
        pass
    if i_d < min(k_all, real.n_bs):
        try:
            user_b, _ = select_next_user(cache, base, [k for k in range(k_all) if k not in base])
            candidates.append(("B", base + [user_b]))
        except SelectionError:
            pass

    best: EvalResult | None = None
    for label, order in candidates:
        try:
            ev = evaluate_allocation(cache, order, ptx, i_direct=i_d)
        except DegenerateError:
            continue
        diag[f"candidate_{label}"] = (tuple(order), ev.se)
        if best is None or ev.se > best.se:
            best, diag["winner"] = ev, label
    if best is None:
        try:
            best = evaluate_allocation(cache, base, ptx, i_direct=i_d)
        except DegenerateError:
            return _empty_result("addone", real, ptx, diag)
    return _finish("addone", real, cache, ptx, best, diag)


def run_algorithm(
    name: str,
    real: ChannelRealization,
    ptx: float,
    cache: SubspaceCache | None = None,
    phase_seed=None,
) -> AlgorithmResult:
    """Dispatch by the identifiers in :data:`ALGORITHMS`."""
    if name == "direct":
        return lisa_direct(real, ptx)
    if name == "random":
        return random_phase_baseline(real, ptx, phase_seed)
    if name == "greedy":
        return greedy_ris_lisa(real, ptx, cache)
    if name == "addone":
        return add_one_ris_lisa(real, ptx, cache)
    raise ValueError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")


def phase_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for the random-phase baseline of a given trial."""
    return trial_rng(seed, trial, stream=1)
