"""Benchmark abort policies and their brute-force tuning loops.

Four families: a consecutive-warning counting rule, a remaining-useful-life
percentile rule, a mean-matched three-state Markov approximation, and the
single-defective-phase surrogate. Tuning minimizes the Monte Carlo mean cost
on common random numbers over a finite grid, breaking ties toward the
smallest parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .beliefs import ObservationModel
from .distributions import Distribution
from .simulation import (
    TruthSpec,
    filtered_abort_periods,
    gen_signals,
    replication_costs,
    simulate_truth,
)
from .solvers import ABORT, CONTINUE, exact_backward_ctmc
from .surrogate import SurrogateModel
from .values import CostModel

__all__ = [
    "BenchmarkPolicy",
    "CPolicy",
    "RPolicy",
    "c_policy_action",
    "r_policy_action",
    "build_m_policy",
    "tune_c_policy",
    "tune_r_policy",
]


class CPolicy:
    """Abort after m_check warnings within any n_check consecutive periods.

    A warning is the highest signal value; observed failure (signal 0) never
    counts as a warning. An optional cutoff period disables triggers late in
    the mission, where a rescue no longer beats finishing; without it the
    counting family cannot express that the gain from aborting vanishes as
    the remaining time shrinks.
    """

    kind = "c-policy"

    def __init__(self, m_check: int, n_check: int, cutoff: int | None = None):
        if not 1 <= m_check <= n_check:
            raise ValueError("need 1 <= m_check <= n_check")
        self.m_check = int(m_check)
        self.n_check = int(n_check)
        self.cutoff = int(cutoff) if cutoff is not None else None

    def warning_counts(self, signals: np.ndarray, n_signals: int) -> np.ndarray:
        warn = (signals == n_signals).astype(np.int64)
        cum = np.concatenate([np.zeros((len(signals), 1), dtype=np.int64), np.cumsum(warn, axis=1)], axis=1)
        n_p = signals.shape[1]
        starts = np.maximum(np.arange(1, n_p + 1) - self.n_check, 0)
        return cum[:, 1:] - cum[:, starts]

    def abort_periods(self, signals: np.ndarray, spec: TruthSpec, cost: CostModel) -> np.ndarray:
        counts = self.warning_counts(signals, spec.obs.n_signals)
        trigger = counts >= self.m_check
        if self.cutoff is not None:
            trigger[:, self.cutoff :] = False
        first = np.argmax(trigger, axis=1) + 1  # column j is period j+1
        return np.where(trigger.any(axis=1), first, cost.n_periods).astype(np.int64)


def c_policy_action(history: np.ndarray, m_check: int, n_check: int) -> str:
    """Action after observing the given signal history (index n-1 is period n)."""
    history = np.asarray(history)
    window = history[-n_check:]
    k_max = int(history.max(initial=1))
    return ABORT if int(np.sum(window == max(k_max, 2))) >= m_check else CONTINUE


class RPolicy:
    """Abort when a low percentile of the predicted remaining life falls short.

    The prediction uses the full surrogate belief filter; the comparison time
    is the remaining mission plus the stop window. Equivalent threshold form:
    abort iff the failure probability within that time exceeds p/100.
    """

    kind = "r-policy"

    def __init__(self, p: float, model: SurrogateModel, obs: ObservationModel):
        if not 0.0 < p < 100.0:
            raise ValueError("percentile must be in (0, 100)")
        self.p = float(p)
        self.model = model
        self.obs = obs
        self._cost = None

    def bind(self, cost: CostModel) -> "RPolicy":
        self._cost = cost
        return self

    def _remaining(self, n: int, cost: CostModel) -> float:
        return (cost.n_periods - n) * cost.delta + float(cost.w[cost.n_periods])

    def abort_batch(self, n: int, beliefs: np.ndarray) -> np.ndarray:
        cost = self._cost
        if cost is None:
            raise RuntimeError("RPolicy must be bound to a cost model before batch use")
        p_fail = self.model.kernel(self._remaining(n, cost)).p_fail
        return np.atleast_2d(beliefs) @ p_fail > self.p / 100.0

    def abort_periods(self, signals: np.ndarray, spec: TruthSpec, cost: CostModel) -> np.ndarray:
        self.bind(cost)
        periods, bad = filtered_abort_periods(self, signals, cost)
        if bad:
            raise RuntimeError(f"{bad} replications hit impossible observations in the RUL filter")
        return periods


def r_policy_action(
    belief: np.ndarray,
    n: int,
    p: float,
    model: SurrogateModel,
    cost: CostModel,
    tol: float = 1e-8,
) -> str:
    """Percentile-rule action at one belief, via the life-quantile bisection.

    Solves kappa(t_p, belief) = p/100 for t_p and aborts when t_p is shorter
    than the remaining mission plus stop time. When even ten horizons cannot
    accumulate that much failure probability, the rule continues.
    """
    if not 0.0 < p < 100.0:
        raise ValueError("percentile must be in (0, 100)")
    target = p / 100.0
    remaining = (cost.n_periods - n) * cost.delta + float(cost.w[cost.n_periods])
    t_max = 10.0 * (cost.horizon + float(cost.w[cost.n_periods]))
    belief = np.asarray(belief, dtype=float)

    def kappa_at(t):
        return float(belief @ model.kernel(float(t)).p_fail)

    if kappa_at(t_max) < target:
        return CONTINUE
    lo, hi = 0.0, t_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kappa_at(mid) < target:
            lo = mid
        else:
            hi = mid
    t_p = 0.5 * (lo + hi)
    return ABORT if t_p < remaining else CONTINUE


@dataclass
class BenchmarkPolicy:
    """A tuned benchmark: family tag, tuned parameters, engine, tuning table."""

    kind: str
    params: dict
    engine: object
    tuning: list[dict] | None = None

    def abort_periods(self, signals: np.ndarray, spec: TruthSpec, cost: CostModel) -> np.ndarray:
        if hasattr(self.engine, "abort_periods"):
            return self.engine.abort_periods(signals, spec, cost)
        periods, bad = filtered_abort_periods(self.engine, signals, cost)
        if bad:
            raise RuntimeError(f"{bad} replications hit impossible observations")
        return periods


def build_m_policy(
    g: Distribution,
    f: Distribution,
    zeta: float,
    cost: CostModel,
    obs: ObservationModel,
    granularity: float = 0.01,
) -> BenchmarkPolicy:
    """Mean-matched three-state Markov approximation, solved exactly.

    The two transition rates match the mean sojourns of the original process
    (1/mean(G) into the defective state, 1/mean(F) out of it) and the direct
    failure rate is kept; the resulting two-transient-state model is solved by
    backward induction on the defective probability.
    """
    q01 = 1.0 / g.mean()
    q12 = 1.0 / f.mean()
    q = np.array(
        [
            [-(q01 + zeta), q01, zeta],
            [0.0, -q12, q12],
            [0.0, 0.0, 0.0],
        ]
    )
    model = SurrogateModel(
        q=q, pi0=np.array([1.0, 0.0]), m1=1, m2=1, lam=max(q01 + zeta, q12), zeta=zeta,
        variant="explicit",
    )
    engine = exact_backward_ctmc(model, cost, obs, granularity)
    return BenchmarkPolicy(
        kind="m-policy",
        params={"q01": q01, "q02": zeta, "q12": q12, "granularity": granularity},
        engine=engine,
    )


def _crn_batch(truth: TruthSpec, reps: int, seed: int):
    paths = simulate_truth(truth, substream(seed, 11), size=reps)
    signals = gen_signals(paths, truth.obs, truth.delta, truth.n_periods, substream(seed, 12))
    return paths, signals


def default_c_grid(n_periods: int) -> list[tuple[int, int, int | None]]:
    """Counting-rule grid: window shape plus the last period allowed to abort."""
    cutoffs: list[int | None] = [None] + list(range(40, n_periods + 1, 20))
    return [
        (m, n, cut)
        for m in range(1, 16)
        for n in range(m, m + 11)
        for cut in cutoffs
    ]


def tune_c_policy(
    truth: TruthSpec,
    cost: CostModel,
    reps: int,
    seed: int,
    grid: list[tuple] | None = None,
) -> BenchmarkPolicy:
    """Brute-force search of the warning rule on common random numbers."""
    if grid is None:
        grid = default_c_grid(cost.n_periods)
    grid = [(g[0], g[1], g[2] if len(g) > 2 else None) for g in grid]
    paths, signals = _crn_batch(truth, reps, seed)
    rows = []
    best = None
    warn_cache: dict[int, np.ndarray] = {}
    for m_check, n_check, cutoff in sorted(grid, key=lambda g: (g[0], g[1], g[2] is not None, g[2] or 0)):
        counts = warn_cache.get(n_check)
        if counts is None:
            counts = CPolicy(1, n_check).warning_counts(signals, truth.obs.n_signals)
            warn_cache[n_check] = counts
        trigger = counts >= m_check
        if cutoff is not None:
            trigger = trigger.copy()
            trigger[:, cutoff:] = False
        first = np.argmax(trigger, axis=1) + 1
        abort_at = np.where(trigger.any(axis=1), first, cost.n_periods).astype(np.int64)
        costs, _ = replication_costs(abort_at, paths, cost)
        mean = float(np.mean(costs))
        half = 1.96 * float(np.std(costs, ddof=1)) / np.sqrt(reps)
        rows.append(
            {"m_check": m_check, "n_check": n_check, "cutoff": cutoff if cutoff is not None else "",
             "mean_cost": mean, "ci95": half}
        )
        if best is None or mean < best[0]:
            best = (mean, m_check, n_check, cutoff)
    _, m_check, n_check, cutoff = best
    return BenchmarkPolicy(
        kind="c-policy",
        params={"m_check": m_check, "n_check": n_check, "cutoff": cutoff},
        engine=CPolicy(m_check, n_check, cutoff),
        tuning=rows,
    )


def tune_r_policy(
    truth: TruthSpec,
    cost: CostModel,
    model: SurrogateModel,
    obs: ObservationModel,
    reps: int,
    seed: int,
    grid: np.ndarray | None = None,
) -> BenchmarkPolicy:
    """Brute-force search of the life-percentile rule on common random numbers.

    The per-period failure-probability statistic is filtered once; each grid
    percentile is then a threshold sweep over the same statistic matrix.
    """
    if grid is None:
        grid = np.arange(1.0, 100.0)
    paths, signals = _crn_batch(truth, reps, seed)
    stats = _rul_statistics(model, obs, signals, cost)
    rows = []
    best = None
    n_p = cost.n_periods
    for p in np.sort(np.asarray(grid, dtype=float)):
        trigger = stats > p / 100.0
        first = np.argmax(trigger, axis=1)
        abort_at = np.where(trigger.any(axis=1), first, n_p).astype(np.int64)
        costs, _ = replication_costs(abort_at, paths, cost)
        mean = float(np.mean(costs))
        half = 1.96 * float(np.std(costs, ddof=1)) / np.sqrt(reps)
        rows.append({"p": float(p), "mean_cost": mean, "ci95": half})
        if best is None or mean < best[0]:
            best = (mean, float(p))
    _, p_star = best
    return BenchmarkPolicy(
        kind="r-policy",
        params={"p": p_star},
        engine=RPolicy(p_star, model, obs),
        tuning=rows,
    )


def _rul_statistics(model, obs, signals, cost) -> np.ndarray:
    """Failure probability within the remaining mission, per (rep, period).

    Periods where the filter is dead (failure observed) carry 0, so no
    threshold can trigger there.
    """
    reps, n_p = signals.shape
    ptilde = model.kernel(cost.delta).ptilde
    lifted = obs.lifted(model.m1, model.m2)
    step_mats = [ptilde * lifted[:, k][None, :] for k in range(obs.n_signals)]
    horizons = [
        model.kernel((n_p - n) * cost.delta + float(cost.w[n_p])).p_fail for n in range(n_p)
    ]
    beliefs = np.tile(model.pi0 / model.pi0.sum(), (reps, 1))
    stats = np.zeros((reps, n_p))
    stats[:, 0] = beliefs @ horizons[0]
    active = np.ones(reps, dtype=bool)
    for n in range(1, n_p):
        y = signals[:, n - 1]
        active &= y > 0
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        b = beliefs[idx]
        upd = np.empty_like(b)
        for k in range(obs.n_signals):
            rows = y[idx] == k + 1
            if rows.any():
                upd[rows] = b[rows] @ step_mats[k]
        norms = upd.sum(axis=1)
        beliefs[idx] = upd / norms[:, None]
        stats[idx, n] = beliefs[idx] @ horizons[n]
    return stats
