"""Ground-truth semi-Markov simulation and Monte Carlo policy evaluation.

The truth process is the three-state semi-Markov chain: a healthy sojourn
drawn from G, a direct exponential failure clock at rate zeta, and a
defective sojourn drawn from F. Signals are emitted at the sampling grid from
the observation matrix, with 0 reserved for observed failure.

`rollout` evaluates one or more policies on common random numbers: all
policies see the same latent paths and the same signal draws, which sharpens
cost comparisons at a fixed replication budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .beliefs import ObservationModel
from .distributions import Distribution, Exponential
from .values import CostModel

__all__ = [
    "TruthSpec",
    "LatentPaths",
    "RolloutSummary",
    "NeverAbortPolicy",
    "simulate_truth",
    "gen_signals",
    "rollout",
    "filtered_abort_periods",
    "replication_costs",
    "absorption_reference_sample",
    "ks_distance",
]


@dataclass(frozen=True)
class TruthSpec:
    """Ground-truth dynamics and observation channel of one experiment."""

    g: Distribution
    f: Distribution
    zeta: float
    obs: ObservationModel
    delta: float
    n_periods: int

    def __post_init__(self):
        if self.zeta < 0.0:
            raise ValueError("zeta must be nonnegative")
        if self.delta <= 0.0 or self.n_periods < 1:
            raise ValueError("delta must be positive and n_periods at least 1")

    @property
    def horizon(self) -> float:
        return self.delta * self.n_periods


@dataclass(frozen=True)
class LatentPaths:
    """Sampled sojourns and the induced failure/defect times."""

    t12: np.ndarray
    t13: np.ndarray
    t23: np.ndarray
    xi: np.ndarray
    defect_time: np.ndarray  # inf when the system fails straight from healthy

    def __len__(self):
        return len(self.xi)


def simulate_truth(spec: TruthSpec, rng: np.random.Generator, size: int = 1) -> LatentPaths:
    """Draw latent trajectories of the three-state process."""
    t12 = np.asarray(spec.g.sample(rng, size=size), dtype=float)
    if spec.zeta > 0.0:
        t13 = np.asarray(Exponential(spec.zeta).sample(rng, size=size), dtype=float)
    else:
        t13 = np.full(size, np.inf)
    t23 = np.asarray(spec.f.sample(rng, size=size), dtype=float)
    direct = t13 <= t12
    xi = np.where(direct, t13, t12 + t23)
    defect_time = np.where(direct, np.inf, t12)
    return LatentPaths(t12=t12, t13=t13, t23=t23, xi=xi, defect_time=defect_time)


def gen_signals(
    paths: LatentPaths,
    obs: ObservationModel,
    delta: float,
    n_periods: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Signal matrix (reps, n_periods) for periods 1..N; 0 marks observed failure."""
    reps = len(paths)
    times = delta * np.arange(1, n_periods + 1)
    failed = paths.xi[:, None] <= times[None, :]
    defective = (paths.defect_time[:, None] <= times[None, :]) & ~failed
    u = rng.random((reps, n_periods))
    cum = np.cumsum(obs.d, axis=1)
    healthy_sig = 1 + (u[..., None] > cum[0][None, None, :]).sum(axis=2)
    defective_sig = 1 + (u[..., None] > cum[1][None, None, :]).sum(axis=2)
    signals = np.where(failed, 0, np.where(defective, defective_sig, healthy_sig))
    return signals.astype(np.int64)


def filtered_abort_periods(policy, signals: np.ndarray, cost: CostModel) -> tuple[np.ndarray, int]:
    """First abort period per replication under the policy's own belief filter.

    Runs the policy's surrogate filter along the observed signals, querying the
    abort rule each period; replications whose filter hits a zero-likelihood
    signal are counted and treated as never-aborting (the caller adjudicates).
    Returns (abort periods with n_periods meaning no abort, diagnostic count).
    """
    model = policy.model
    obs = policy.obs
    reps, n_p = signals.shape
    m = model.n_transient
    ptilde = model.kernel(cost.delta).ptilde
    lifted = obs.lifted(model.m1, model.m2)
    step_mats = [ptilde * lifted[:, k][None, :] for k in range(obs.n_signals)]

    beliefs = np.tile(model.pi0 / model.pi0.sum(), (reps, 1))
    abort_at = np.full(reps, n_p, dtype=np.int64)
    active = np.ones(reps, dtype=bool)
    bad = 0

    if policy.abort_batch(0, beliefs[:1])[0]:
        # The initial belief is shared, so an abort at period 0 is global.
        return np.zeros(reps, dtype=np.int64), 0

    for n in range(1, n_p):
        y = signals[:, n - 1]
        died = active & (y == 0)
        active[died] = False
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
        zero = norms <= 1e-300
        if zero.any():
            bad += int(zero.sum())
            active[idx[zero]] = False
            idx = idx[~zero]
            upd = upd[~zero]
            norms = norms[~zero]
        if len(idx) == 0:
            continue
        beliefs[idx] = upd / norms[:, None]
        abort_now = policy.abort_batch(n, beliefs[idx])
        if abort_now.any():
            hit = idx[abort_now]
            abort_at[hit] = n
            active[hit] = False
    return abort_at, bad


def replication_costs(
    abort_at: np.ndarray, paths: LatentPaths, cost: CostModel
) -> tuple[np.ndarray, dict]:
    """Per-replication operational cost and outcome classification.

    An abort recorded at or after the (unobserved) failure time is void: the
    mission already ended in failure. Failure during the rescue or stop window
    is adjudicated by comparing the failure time with the window end; the
    rescue does not alter the failure process.
    """
    n_p = cost.n_periods
    delta = cost.delta
    xi = paths.xi
    a = np.where(xi <= abort_at * delta, n_p, abort_at)
    aborted = a < n_p
    stop_time = np.where(aborted, a * delta + cost.w[np.minimum(a, n_p)], n_p * delta + cost.w[n_p])
    failed = xi <= stop_time

    if not cost.multi_task:
        cm = float(cost.cm)
        costs = np.where(
            failed, cm + cost.cs, np.where(aborted, cm, 0.0)
        )
    else:
        ends = cost.mission_ends
        cms = np.asarray(cost.cm)
        # Mission l completes at period ends_l; the final mission additionally
        # needs the stop window. An abort fails every not-yet-completed
        # mission; otherwise the failure time decides.
        end_times = ends * delta
        end_times = end_times.astype(float)
        end_times[-1] += float(cost.w[n_p])
        mission_failed = np.where(
            aborted[:, None],
            a[:, None] < ends[None, :],
            xi[:, None] <= end_times[None, :],
        )
        costs = mission_failed @ cms + cost.cs * failed
        defective_at_stop = (paths.defect_time <= stop_time) & ~failed
        costs = costs + cost.cr * defective_at_stop

    outcomes = {
        "aborted": aborted,
        "failed": failed,
        "success": ~aborted & ~failed,
        "abort_period": a,
    }
    return costs, outcomes


@dataclass(frozen=True)
class RolloutSummary:
    policy: str
    reps: int
    mean_cost: float
    ci95: float
    success_prob: float
    failure_prob: float
    abort_rate: float
    mean_abort_period: float
    diagnostics: int = 0

    def to_row(self) -> dict:
        return {
            "policy": self.policy,
            "reps": self.reps,
            "mean_cost": round(self.mean_cost, 4),
            "ci95": round(self.ci95, 4),
            "success_prob": round(self.success_prob, 6),
            "failure_prob": round(self.failure_prob, 6),
            "abort_rate": round(self.abort_rate, 6),
            "mean_abort_period": round(self.mean_abort_period, 4)
            if not np.isnan(self.mean_abort_period)
            else "",
        }


def _summarize(name, costs, outcomes, diagnostics) -> RolloutSummary:
    reps = len(costs)
    aborted = outcomes["aborted"]
    mean = float(np.mean(costs))
    ci = 1.96 * float(np.std(costs, ddof=1)) / np.sqrt(reps) if reps > 1 else float("nan")
    return RolloutSummary(
        policy=name,
        reps=reps,
        mean_cost=mean,
        ci95=ci,
        success_prob=float(np.mean(outcomes["success"])),
        failure_prob=float(np.mean(outcomes["failed"])),
        abort_rate=float(np.mean(aborted)),
        mean_abort_period=float(np.mean(outcomes["abort_period"][aborted])) if aborted.any() else float("nan"),
        diagnostics=diagnostics,
    )


def rollout(
    policies,
    spec: TruthSpec,
    cost: CostModel,
    reps: int,
    seed: int,
):
    """Monte Carlo evaluation of one policy or a named family of policies.

    All policies share the same latent paths and signal draws (common random
    numbers). Returns a RolloutSummary, or a dict of them when ``policies``
    is a mapping.
    """
    single = not isinstance(policies, dict)
    named = {"policy": policies} if single else policies

    paths = simulate_truth(spec, substream(seed, 101), size=reps)
    signals = gen_signals(paths, spec.obs, spec.delta, spec.n_periods, substream(seed, 102))

    out = {}
    for name, policy in named.items():
        abort_at, bad = _abort_periods_for(policy, signals, spec, cost)
        if bad > 0.001 * reps:
            raise RuntimeError(
                f"policy {name!r}: {bad} replications hit impossible observations (> 0.1%)"
            )
        costs, outcomes = replication_costs(abort_at, paths, cost)
        out[name] = _summarize(name, costs, outcomes, bad)
    return out["policy"] if single else out


def _abort_periods_for(policy, signals, spec, cost):
    if hasattr(policy, "abort_periods"):
        return policy.abort_periods(signals, spec, cost), 0
    if hasattr(policy, "abort_batch"):
        return filtered_abort_periods(policy, signals, cost)
    raise TypeError(f"unsupported policy object: {policy!r}")


class NeverAbortPolicy:
    """Baseline that always continues (useful for calibration runs)."""

    kind = "never-abort"

    def abort_periods(self, signals, spec, cost):
        return np.full(signals.shape[0], cost.n_periods, dtype=np.int64)


def trace_rows(policy, spec: TruthSpec, cost: CostModel, reps: int, seed: int) -> list[dict]:
    """Per-period trace of a filtered policy on a few replications.

    Rows carry the observed signal, the filtered defective-class mass, and the
    action taken; tracing stops at abort or observed failure. Intended for
    small ``reps`` (diagnostics), not for production rollouts.
    """
    if not hasattr(policy, "abort_batch"):
        raise TypeError("tracing needs a belief-filtering policy")
    paths = simulate_truth(spec, substream(seed, 101), size=reps)
    signals = gen_signals(paths, spec.obs, spec.delta, spec.n_periods, substream(seed, 102))
    model = policy.model
    ptilde = model.kernel(cost.delta).ptilde
    lifted = policy.obs.lifted(model.m1, model.m2)
    rows = []
    for rep in range(reps):
        pi = model.pi0 / model.pi0.sum()
        for n in range(cost.n_periods):
            if n > 0:
                y = int(signals[rep, n - 1])
                if y == 0:
                    rows.append({"rep": rep, "period": n, "signal": 0,
                                 "defective_belief": "", "action": "failed"})
                    break
                unnorm = (pi @ ptilde) * lifted[:, y - 1]
                pi = unnorm / unnorm.sum()
            else:
                y = ""
            abort = bool(policy.abort_batch(n, pi[None, :])[0])
            rows.append({
                "rep": rep,
                "period": n,
                "signal": y,
                "defective_belief": round(float(pi[model.m1 :].sum()), 6),
                "action": "abort" if abort else "continue",
            })
            if abort:
                break
    return rows


def absorption_reference_sample(model, rng: np.random.Generator, size: int) -> np.ndarray:
    """Failure times built directly from the surrogate's sojourn components.

    Independent of the jump-chain sampler: draws the healthy sojourn, the
    direct-failure clock, and the defect sojourn separately and combines them
    as T13 when T13 <= T12, else T12 + T23. Used to validate that the chain's
    absorption time has this distribution.
    """
    m1, m2 = model.m1, model.m2
    lam, zeta = model.lam, model.zeta
    if model.variant == "deterministic-start":
        nu = float(model.q[0, 1])
        t12 = rng.gamma(m1, 1.0 / nu, size=size)
    elif model.variant == "erlang-mixture-start":
        phase = rng.choice(m1, size=size, p=model.pi0[:m1] / model.pi0[:m1].sum())
        t12 = rng.gamma(m1 - phase, 1.0 / (lam - zeta), size=size)
    else:
        raise ValueError("reference decomposition requires a constructed variant")
    t13 = rng.exponential(1.0 / zeta, size=size) if zeta > 0.0 else np.full(size, np.inf)

    # Reconstruct the defect-sojourn mixture weights from the jump rates.
    jump = model.q[m1 : m1 + m2 - 1, -1] / lam if m2 > 1 else np.zeros(0)
    survive = np.concatenate([[1.0], np.cumprod(1.0 - jump)])
    weights = np.concatenate([jump * survive[:-1], [survive[-1]]])
    shape = 1 + rng.choice(m2, size=size, p=weights / weights.sum())
    t23 = rng.gamma(shape, 1.0 / lam, size=size)
    return np.where(t13 <= t12, t13, t12 + t23)


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))
