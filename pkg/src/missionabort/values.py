"""Cost model, Bellman cost primitives, and structural threshold certificates.

Single-task costs: aborting at period n costs the mission loss plus the
expected system loss during the rescue window w_n; finishing costs the
expected loss during the stop window w_N. The multi-task variant charges a
per-mission loss for every unfinished mission and a repair cost when the
post-rescue inspection finds the system defective.

The thresholds: ``never_abort`` certifies that continuing always wins;
``find_hat_n`` locates the period after which continuing is optimal at every
belief; ``find_tilde_n`` locates the last period at which aborting is
strictly optimal at the worst belief.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .surrogate import SurrogateModel

__all__ = [
    "CostModel",
    "abort_cost_vector",
    "terminal_cost_vector",
    "upper_continue_vector",
    "continue_stage_coeff",
    "v_ab",
    "v_c_upper",
    "never_abort",
    "find_hat_n",
    "find_tilde_n",
    "vertex_value_recursion",
    "no_intermediate_check",
    "remove_counter_values",
    "multi_no_abort",
    "multi_no_abort_after",
]


@dataclass(frozen=True)
class CostModel:
    """Costs and timing of one mission (or a sequence of tasks).

    ``w`` holds the rescue times w_0..w_N; w_N is the stop time after the
    final period. Single-task mode requires a nondecreasing rescue schedule;
    the multi-task mode (``task_lengths`` set) waives that.
    """

    cs: float
    cm: float | tuple[float, ...]
    delta: float
    n_periods: int
    w: np.ndarray
    cr: float = 0.0
    task_lengths: tuple[int, ...] | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        n = self.n_periods
        if self.delta <= 0.0 or n < 1:
            raise ValueError("delta must be positive and n_periods at least 1")
        if w.shape != (n + 1,):
            raise ValueError(f"rescue schedule must have length {n + 1}, got {w.shape}")
        if w[0] != 0.0:
            raise ValueError("w_0 must be 0")
        if np.any(w < 0.0):
            raise ValueError("rescue times must be nonnegative")
        if self.task_lengths is None:
            if not np.isscalar(self.cm) and not isinstance(self.cm, (int, float)):
                raise ValueError("single-task mode requires a scalar mission cost")
            if np.any(np.diff(w) < -1e-12):
                raise ValueError("single-task mode requires a nondecreasing rescue schedule")
            slack = (n - np.arange(n)) * self.delta + w[n] - w[:n]
            if np.any(slack < -1e-9):
                raise ValueError("rescue times must not exceed the remaining mission plus stop time")
            if self.cr != 0.0:
                raise ValueError("repair cost applies only in multi-task mode")
        else:
            lengths = tuple(int(x) for x in self.task_lengths)
            object.__setattr__(self, "task_lengths", lengths)
            if any(x < 1 for x in lengths) or sum(lengths) != n:
                raise ValueError("task lengths must be positive and sum to n_periods")
            cm = tuple(float(c) for c in np.atleast_1d(self.cm))
            if len(cm) != len(lengths):
                raise ValueError("one mission cost per task is required")
            object.__setattr__(self, "cm", cm)

    @property
    def multi_task(self) -> bool:
        return self.task_lengths is not None

    @property
    def horizon(self) -> float:
        return self.n_periods * self.delta

    @property
    def mission_ends(self) -> np.ndarray:
        """Cumulative completion periods of the tasks (multi-task mode)."""
        if not self.multi_task:
            return np.array([self.n_periods])
        return np.cumsum(self.task_lengths)

    def active_cm(self, n: int) -> float:
        """Total mission loss charged if the run ends during period n."""
        if not self.multi_task:
            return float(self.cm)
        return float(sum(c for c, end in zip(self.cm, self.mission_ends) if n < end))

    @property
    def terminal_cm(self) -> float:
        return float(self.cm if not self.multi_task else self.cm[-1])


def _defect_indicator(model: SurrogateModel) -> np.ndarray:
    ind = np.zeros(model.n_transient)
    ind[model.m1 :] = 1.0
    return ind


def abort_cost_vector(model: SurrogateModel, cost: CostModel, n: int) -> np.ndarray:
    """Linear coefficients of the abort cost at period n over transient states."""
    if not 0 <= n <= cost.n_periods:
        raise ValueError(f"period must be in 0..{cost.n_periods}, got {n}")
    kern = model.kernel(float(cost.w[n]))
    vec = cost.active_cm(n) + cost.cs * kern.p_fail
    if cost.multi_task and cost.cr != 0.0:
        vec = vec + cost.cr * (kern.ptilde @ _defect_indicator(model))
    return vec


def terminal_cost_vector(model: SurrogateModel, cost: CostModel) -> np.ndarray:
    """Linear coefficients of the end-of-horizon cost (stop window plus inspection)."""
    kern = model.kernel(float(cost.w[cost.n_periods]))
    vec = (cost.cs + cost.terminal_cm) * kern.p_fail
    if cost.multi_task and cost.cr != 0.0:
        vec = vec + cost.cr * (kern.ptilde @ _defect_indicator(model))
    return vec


def upper_continue_vector(model: SurrogateModel, cost: CostModel, n: int) -> np.ndarray:
    """Coefficients of the cost of continuing to the end without further aborts."""
    if cost.multi_task:
        raise ValueError("the closed-form continue bound applies to single-task mode")
    t = (cost.n_periods - n) * cost.delta + float(cost.w[cost.n_periods])
    return (cost.cs + float(cost.cm)) * model.kernel(t).p_fail


def continue_stage_coeff(cost: CostModel, n: int) -> float:
    """Cost charged on failure before the next epoch when continuing at period n."""
    return cost.cs + cost.active_cm(n)


def v_ab(n: int, belief: np.ndarray, model: SurrogateModel, cost: CostModel) -> float:
    return float(np.asarray(belief, dtype=float) @ abort_cost_vector(model, cost, n))


def v_c_upper(n: int, belief: np.ndarray, model: SurrogateModel, cost: CostModel) -> float:
    return float(np.asarray(belief, dtype=float) @ upper_continue_vector(model, cost, n))


def never_abort(cost: CostModel, lam: float) -> bool:
    """Aborting is never optimal when mission loss dominates: cm/cs >= e^{lam (H + w_N)} - 1."""
    if cost.cs <= 0.0:
        return True
    x = lam * (cost.horizon + float(cost.w[cost.n_periods]))
    return float(cost.cm) / cost.cs >= math.expm1(x)


def find_hat_n(model: SurrogateModel, cost: CostModel) -> int:
    """Smallest period from which continuing beats aborting at every belief.

    The gap max_pi (upper-continue - abort) is attained at a vertex and is
    nonincreasing in n, so a binary search over periods suffices.
    """
    if cost.multi_task:
        raise ValueError("hat-n applies to single-task mode; use the full horizon otherwise")

    def ok(n: int) -> bool:
        gap = upper_continue_vector(model, cost, n) - abort_cost_vector(model, cost, n)
        return float(gap.max()) <= 0.0

    if ok(0):
        return 0
    lo, hi = 0, cost.n_periods
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _last_state_exit_rate(model: SurrogateModel) -> float:
    m = model.n_transient
    row = model.q[m - 1]
    if np.any(np.abs(np.delete(row[:m], m - 1)) > 0.0):
        raise ValueError("last transient state must exit only to failure")
    return float(-row[m - 1])


def vertex_value_recursion(model: SurrogateModel, cost: CostModel) -> tuple[np.ndarray, np.ndarray]:
    """Exact abort/continue values at the worst vertex for every period.

    From the last transient state the chain either stays put or fails, so the
    value at that vertex never references any other belief and satisfies a
    scalar backward recursion. Returns (v_ab, v_c) arrays over n = 0..N-1,
    with v_c using optimal continuation.
    """
    q = _last_state_exit_rate(model)
    n_p = cost.n_periods
    surv_step = math.exp(-q * cost.delta)
    w = cost.w
    surv_w = np.exp(-q * w)
    if cost.multi_task:
        v_next = (cost.cs + cost.terminal_cm) * (1.0 - surv_w[n_p]) + cost.cr * surv_w[n_p]
    else:
        v_next = (cost.cs + float(cost.cm)) * (1.0 - surv_w[n_p])
    vab = np.empty(n_p)
    vc = np.empty(n_p)
    for n in range(n_p - 1, -1, -1):
        vab[n] = cost.active_cm(n) + cost.cs * (1.0 - surv_w[n])
        if cost.multi_task:
            vab[n] += cost.cr * surv_w[n]
        vc[n] = continue_stage_coeff(cost, n) * (1.0 - surv_step) + surv_step * v_next
        v_next = min(vab[n], vc[n])
    return vab, vc


def find_tilde_n(model: SurrogateModel, cost: CostModel) -> int | None:
    """Last period at which aborting is strictly optimal at the worst vertex."""
    if cost.multi_task:
        raise ValueError("tilde-n is defined for single-task mode")
    vab, vc = vertex_value_recursion(model, cost)
    idx = np.flatnonzero(vc > vab)
    return int(idx[-1]) if len(idx) else None


def remove_counter_values(model: SurrogateModel, cost: CostModel, hat_n: int) -> np.ndarray:
    """Per-state gain of aborting at hat_n - 1 over never aborting again."""
    if hat_n < 1:
        raise ValueError("the gain comparison needs hat_n >= 1")
    t_cont = (cost.n_periods - hat_n + 1) * cost.delta + float(cost.w[cost.n_periods])
    ratio = 1.0 + float(cost.cm) / cost.cs
    return ratio * model.kernel(t_cont).p_fail - model.kernel(float(cost.w[hat_n - 1])).p_fail


def no_intermediate_check(model: SurrogateModel, cost: CostModel, hat_n: int) -> bool:
    """True when the policy needs no lower control limit before hat_n.

    Holds when the abort gain peaks at the worst state, or under an
    identically-zero rescue schedule. hat_n = 0 is vacuously true.
    """
    if np.all(cost.w == 0.0):
        return True
    if hat_n < 1:
        return True
    vals = remove_counter_values(model, cost, hat_n)
    return int(np.argmax(vals)) == model.n_transient - 1


def multi_no_abort(cost: CostModel, lam: float) -> bool:
    """Continuing is always optimal in the multi-task model (closed-form check)."""
    if not cost.multi_task:
        raise ValueError("multi-task cost model required")
    x = lam * (cost.horizon + float(cost.w[cost.n_periods]))
    denom = -math.expm1(-x)
    lhs = cost.cm[-1] * math.exp(-x) / denom
    ends = cost.mission_ends
    rhs = cost.cs + sum(
        cost.cm[l] * (-math.expm1(-lam * cost.delta * ends[l])) / denom
        for l in range(len(cost.cm) - 1)
    )
    return lhs >= rhs


def multi_no_abort_after(l: int, model: SurrogateModel, cost: CostModel, lam: float) -> bool:
    """Aborting is never optimal once mission l (1-based, 0 = before any) is complete."""
    if not cost.multi_task:
        raise ValueError("multi-task cost model required")
    n_tasks = len(cost.cm)
    if not 0 <= l < n_tasks:
        raise ValueError(f"l must be in 0..{n_tasks - 1}, got {l}")
    ends = cost.mission_ends
    done = int(ends[l - 1]) if l >= 1 else 0
    lhs = 0.0
    for lp in range(l + 1, n_tasks + 1):
        span = cost.delta * (ends[lp - 1] - done)
        if lp == n_tasks:
            span += float(cost.w[cost.n_periods])
        lhs += cost.cm[lp - 1] * ((1.0 if lp < n_tasks else 0.0) - math.exp(-lam * span))
    kern = model.kernel(float(cost.w[done]))
    rhs = cost.cs * (
        float(kern.p_fail[0])
        + math.exp(-lam * (cost.horizon - cost.delta * done + float(cost.w[cost.n_periods])))
        - 1.0
    )
    return lhs <= rhs
