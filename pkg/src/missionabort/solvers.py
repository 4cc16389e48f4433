"""Policy computation: point-based value iteration and exact grid solvers.

The finite-horizon stopping problem is solved either by a structure-aware
point-based value iteration (value function kept as per-period sets of linear
coefficient vectors, value = min alpha'pi) or, in the low-dimensional special
cases, by backward induction on a discretized statistic: the defective
probability when there are two transient states, or the spherical radius when
there is a single defective phase (the angle sequence is then deterministic).

The modified PBVI variant exploits convexity of the abort region: once
iterations pass the activation threshold, expansion candidates lying in the
convex hull of the currently-abort-classified points are discarded, and the
worst vertex is added to that hull for all periods where aborting there is
known to be optimal.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._rng import substream
from .beliefs import ObservationModel, spherical_radius, to_spherical
from .surrogate import SurrogateModel
from .values import (
    CostModel,
    abort_cost_vector,
    continue_stage_coeff,
    find_hat_n,
    find_tilde_n,
    terminal_cost_vector,
    upper_continue_vector,
    vertex_value_recursion,
)

__all__ = [
    "PbviConfig",
    "ThresholdReport",
    "AlphaSetPolicy",
    "ControlLimitPolicy",
    "pbvi",
    "backup",
    "hull_membership",
    "exact_backward_ctmc",
    "exact_backward_dimred",
    "action",
    "policy_to_json",
]

logger = logging.getLogger(__name__)

ABORT = "abort"
CONTINUE = "continue"


@dataclass(frozen=True)
class PbviConfig:
    """Hyper-parameters of the point-based solver.

    ``l1`` initial belief-set size, ``z1`` iteration cap, ``z2`` iteration
    after which hull pruning activates (modified variant), ``n_samples`` the
    simulation fan-out per expansion source, ``eps`` the sup-norm stopping
    tolerance. ``max_beliefs`` caps per-period set growth so the stopping rule
    engages at desk scale.
    """

    l1: int = 64
    z1: int = 30
    z2: int = 10
    n_samples: int = 512
    eps: float = 1e-3
    seed: int = 0
    max_beliefs: int = 4096
    hull_cap: int = 512
    hull_tol: float = 1e-9

    def __post_init__(self):
        if min(self.l1, self.z1, self.z2, self.n_samples) < 1 or self.eps <= 0.0:
            raise ValueError("PBVI hyper-parameters must be positive")

    def to_json(self) -> dict:
        return {
            "l1": self.l1, "z1": self.z1, "z2": self.z2, "n_samples": self.n_samples,
            "eps": self.eps, "seed": self.seed, "max_beliefs": self.max_beliefs,
            "hull_cap": self.hull_cap, "hull_tol": self.hull_tol,
        }


@dataclass(frozen=True)
class ThresholdReport:
    never_abort: bool
    hat_n: int
    tilde_n: int | None
    no_intermediate: bool | None

    def to_json(self) -> dict:
        return {
            "never_abort": self.never_abort,
            "hat_n": self.hat_n,
            "tilde_n": self.tilde_n,
            "no_intermediate": self.no_intermediate,
        }


class _StepContext:
    """Per-model precomputation shared by backups, actions, and filters."""

    def __init__(self, model: SurrogateModel, cost: CostModel, obs: ObservationModel):
        self.model = model
        self.cost = cost
        self.obs = obs
        kern = model.kernel(cost.delta)
        self.ptilde = kern.ptilde
        self.pfail_step = kern.p_fail
        self.lifted = obs.lifted(model.m1, model.m2)  # (m, K)
        self.n_signals = obs.n_signals
        # M_k = Ptilde(delta) diag(dtilde_k); pi' M_k is the unnormalized posterior.
        self.step_mats = [self.ptilde * self.lifted[:, k][None, :] for k in range(self.n_signals)]
        self._abort_vecs: dict[int, np.ndarray] = {}

    def abort_vec(self, n: int) -> np.ndarray:
        vec = self._abort_vecs.get(n)
        if vec is None:
            vec = abort_cost_vector(self.model, self.cost, n)
            self._abort_vecs[n] = vec
        return vec

    def continue_values(self, beliefs: np.ndarray, alpha_next: np.ndarray, n: int):
        """Backed-up continue value at each belief; also the argmin indices per signal."""
        stage = continue_stage_coeff(self.cost, n)
        vals = stage * (beliefs @ self.pfail_step)
        argmins = []
        for mat in self.step_mats:
            scores = (beliefs @ mat) @ alpha_next.T  # (L, a)
            j = np.argmin(scores, axis=1)
            vals = vals + scores[np.arange(len(beliefs)), j]
            argmins.append(j)
        return vals, np.stack(argmins, axis=1)  # (L,), (L, K)

    def continue_coeff(self, alpha_next: np.ndarray, j_row: np.ndarray, n: int) -> np.ndarray:
        """Supporting coefficient vector of the continue branch for one argmin profile."""
        stage = continue_stage_coeff(self.cost, n)
        coeff = stage * self.pfail_step.copy()
        for k, mat in enumerate(self.step_mats):
            coeff = coeff + mat @ alpha_next[j_row[k]]
        return coeff


def _backup_period(ctx: _StepContext, beliefs: np.ndarray, alpha_next: np.ndarray, n: int):
    """One-period backup over a set of beliefs.

    Returns (alpha_set, values, abort_mask): the deduplicated coefficient set
    collected at the beliefs, the backed-up values, and each point's
    classification (abort wins ties).
    """
    v_ab = beliefs @ ctx.abort_vec(n)
    v_c, argmins = ctx.continue_values(beliefs, alpha_next, n)
    abort_mask = v_ab <= v_c
    values = np.where(abort_mask, v_ab, v_c)

    coeffs: list[np.ndarray] = []
    if abort_mask.any() or not (~abort_mask).any():
        coeffs.append(ctx.abort_vec(n)[None, :])
    cont = argmins[~abort_mask]
    if len(cont):
        profiles = np.unique(cont, axis=0)  # one coefficient per argmin profile
        stage = continue_stage_coeff(ctx.cost, n)
        block = np.tile(stage * ctx.pfail_step, (len(profiles), 1))
        for k, mat in enumerate(ctx.step_mats):
            block += alpha_next[profiles[:, k]] @ mat.T
        coeffs.append(block)
    return np.vstack(coeffs), values, abort_mask


def backup(
    beliefs: np.ndarray,
    alpha_next: np.ndarray,
    n: int,
    model: SurrogateModel,
    cost: CostModel,
    obs: ObservationModel,
):
    """Standalone one-period backup (see :func:`pbvi` for the full solver)."""
    ctx = _StepContext(model, cost, obs)
    return _backup_period(ctx, np.atleast_2d(np.asarray(beliefs, dtype=float)), np.atleast_2d(alpha_next), n)


def hull_membership(point: np.ndarray, hull_points: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether the point is within ``tol`` (sup-norm) of the points' convex hull.

    Decided by a feasibility linear program over the combination weights.
    """
    hull_points = np.atleast_2d(np.asarray(hull_points, dtype=float))
    if hull_points.shape[0] == 0:
        return False
    point = np.asarray(point, dtype=float)
    m = point.shape[0]
    h = hull_points.shape[0]
    # Variables: weights w (h) and the sup-norm slack t. Minimize t subject to
    # -t <= (H'w - p)_i <= t, sum w = 1, w >= 0.
    c = np.zeros(h + 1)
    c[-1] = 1.0
    ht = hull_points.T  # (m, h)
    a_ub = np.block([[ht, -np.ones((m, 1))], [-ht, -np.ones((m, 1))]])
    b_ub = np.concatenate([point, -point])
    a_eq = np.concatenate([np.ones(h), [0.0]])[None, :]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=[(0.0, None)] * (h + 1), method="highs")
    return bool(res.success and res.fun <= tol)


def _min_distances(points: np.ndarray, existing: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Distance from each point to its nearest neighbor in ``existing``."""
    out = np.empty(len(points))
    ex_sq = np.einsum("ij,ij->i", existing, existing)
    for lo in range(0, len(points), chunk):
        block = points[lo : lo + chunk]
        sq = (
            np.einsum("ij,ij->i", block, block)[:, None]
            - 2.0 * (block @ existing.T)
            + ex_sq[None, :]
        )
        out[lo : lo + chunk] = np.sqrt(np.clip(sq.min(axis=1), 0.0, None))
    return out


def _thin_points(points: np.ndarray, cap: int) -> np.ndarray:
    """Reduce a point cloud to ``cap`` points by greedy farthest-point selection."""
    if len(points) <= cap:
        return points
    chosen = [0]
    dist = np.linalg.norm(points - points[0], axis=1)
    for _ in range(cap - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return points[np.array(chosen)]


def _dedupe_rows(points: np.ndarray, decimals: int = 12) -> np.ndarray:
    if len(points) == 0:
        return points
    _, idx = np.unique(np.round(points, decimals), axis=0, return_index=True)
    return points[np.sort(idx)]


class AlphaSetPolicy:
    """Policy represented by per-period sets of linear coefficient vectors.

    The approximate value is min over the period's set of alpha'pi; the action
    compares the abort cost against the backed-up continue value and aborts on
    ties. From ``hat_n`` on, the policy always continues.
    """

    kind = "alpha-set"

    def __init__(self, model, cost, obs, alphas, thresholds: ThresholdReport, metadata: dict):
        self.model = model
        self.cost = cost
        self.obs = obs
        self.alphas = alphas  # list over n = 0..N of (a_n, m) arrays
        self.thresholds = thresholds
        self.metadata = metadata
        self._ctx = _StepContext(model, cost, obs)

    @property
    def hat_n(self) -> int:
        return self.thresholds.hat_n

    def value(self, n: int, belief: np.ndarray) -> float:
        return float(np.min(self.alphas[n] @ np.asarray(belief, dtype=float)))

    def abort_batch(self, n: int, beliefs: np.ndarray) -> np.ndarray:
        beliefs = np.atleast_2d(np.asarray(beliefs, dtype=float))
        if n >= self.hat_n:
            return np.zeros(len(beliefs), dtype=bool)
        v_ab = beliefs @ self._ctx.abort_vec(n)
        v_c, _ = self._ctx.continue_values(beliefs, self.alphas[n + 1], n)
        return v_ab <= v_c

    def action(self, n: int, belief: np.ndarray) -> str:
        return ABORT if bool(self.abort_batch(n, belief)[0]) else CONTINUE


class ControlLimitPolicy:
    """Policy given by a per-period abort interval of a scalar statistic.

    ``statistic``: "defective-probability" (two transient states) or
    "spherical-radius" (single defective phase; the angle sequence is fixed).
    Intervals are (lo, hi) pairs or None when abort is never optimal.
    """

    kind = "control-limit-table"

    def __init__(self, model, cost, obs, statistic, intervals, thresholds, metadata, angles=None, value0=None):
        self.model = model
        self.cost = cost
        self.obs = obs
        self.statistic = statistic
        self.intervals = intervals  # list over n = 0..N-1
        self.thresholds = thresholds
        self.metadata = metadata
        self.angles = angles
        self.value0 = value0

    @property
    def hat_n(self) -> int:
        return self.thresholds.hat_n

    def statistic_batch(self, beliefs: np.ndarray) -> np.ndarray:
        beliefs = np.atleast_2d(np.asarray(beliefs, dtype=float))
        if self.statistic == "defective-probability":
            return beliefs[:, -1]
        delta = beliefs.copy()
        delta[:, -1] -= 1.0
        return np.linalg.norm(delta, axis=1)

    def abort_batch(self, n: int, beliefs: np.ndarray) -> np.ndarray:
        stats = self.statistic_batch(beliefs)
        interval = self.intervals[n] if n < len(self.intervals) else None
        if interval is None:
            return np.zeros(len(stats), dtype=bool)
        lo, hi = interval
        return (stats >= lo - 1e-12) & (stats <= hi + 1e-12)

    def action(self, n: int, belief: np.ndarray) -> str:
        return ABORT if bool(self.abort_batch(n, belief)[0]) else CONTINUE

    def value(self, n: int, belief: np.ndarray) -> float:
        raise NotImplementedError("control-limit policies store thresholds, not value functions")


def action(policy, n: int, belief: np.ndarray) -> str:
    """Evaluate a policy at one (period, belief) pair."""
    return policy.action(n, belief)


def _simulate_initial_beliefs(ctx: _StepContext, hat_n: int, l1: int, rng) -> list[np.ndarray]:
    """Seed per-period belief sets with filtered beliefs from simulated runs."""
    model, obs = ctx.model, ctx.obs
    m = model.n_transient
    p_full = model.kernel(ctx.cost.delta).p
    cum_trans = np.cumsum(p_full[:m], axis=1)
    lifted_cum = np.cumsum(ctx.lifted, axis=1)

    sets: list[list[np.ndarray]] = [[] for _ in range(hat_n)]
    states = rng.choice(m, size=l1, p=model.pi0 / model.pi0.sum())
    beliefs = np.tile(model.pi0 / model.pi0.sum(), (l1, 1))
    alive = np.ones(l1, dtype=bool)
    for n in range(1, hat_n):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        u = rng.random(len(idx))
        nxt = (u[:, None] > cum_trans[states[idx]]).sum(axis=1)
        states[idx] = nxt
        died = nxt == m
        alive[idx[died]] = False
        live = idx[~died]
        if len(live) == 0:
            continue
        u2 = rng.random(len(live))
        signals = (u2[:, None] > lifted_cum[states[live]]).sum(axis=1)  # 0-based signal index
        for k in range(ctx.n_signals):
            rows = live[signals == k]
            if len(rows) == 0:
                continue
            unnorm = (beliefs[rows] @ ctx.step_mats[k])
            beliefs[rows] = unnorm / unnorm.sum(axis=1, keepdims=True)
        sets[n].extend(beliefs[live])

    out = []
    for n in range(hat_n):
        if n == 0:
            out.append(np.atleast_2d(model.pi0 / model.pi0.sum()))
            continue
        if sets[n]:
            out.append(_dedupe_rows(np.vstack(sets[n])))
        else:
            # All runs failed before period n; fall back to the
            # survival-conditioned propagation of the initial belief.
            pi = model.pi0 / model.pi0.sum()
            for _ in range(n):
                pi = pi @ ctx.ptilde
                pi = pi / pi.sum()
            out.append(np.atleast_2d(pi))
    return out


def _expansion_candidates(ctx: _StepContext, beliefs: np.ndarray, n_samples: int, rng):
    """Simulated one-step posteriors per source belief.

    Since the posterior depends on the source belief and the signal only, the
    samples decide which signals appear; candidates are the corresponding
    Bayes updates, weighted towards reachable ones.
    """
    n_signals = ctx.n_signals
    survive_probs = np.stack(
        [beliefs @ mat @ np.ones(ctx.model.n_transient) for mat in ctx.step_mats], axis=1
    )  # (L, K): joint prob of surviving and observing k
    fail = np.clip(1.0 - survive_probs.sum(axis=1, keepdims=True), 0.0, 1.0)
    pvals = np.concatenate([survive_probs, fail], axis=1)
    pvals = pvals / pvals.sum(axis=1, keepdims=True)
    counts = rng.multinomial(n_samples, pvals)  # (L, K+1)

    posteriors = []
    for k in range(n_signals):
        unnorm = beliefs @ ctx.step_mats[k]
        posteriors.append(unnorm / unnorm.sum(axis=1, keepdims=True))
    return posteriors, counts[:, :n_signals] > 0


def pbvi(
    model: SurrogateModel,
    cost: CostModel,
    obs: ObservationModel,
    config: PbviConfig,
    variant: str = "modified",
    thresholds: ThresholdReport | None = None,
    gap_target: tuple[float, float] | None = None,
    probe_fn=None,
) -> AlphaSetPolicy:
    """Point-based value iteration (classical, or modified with hull pruning).

    ``gap_target`` optionally stops the run once the value at the initial
    belief is within a relative gap of a known reference: pass
    (reference_value, relative_gap). ``probe_fn(tau, alphas, elapsed_s)`` is
    called after each backup sweep; returning True stops the run. Iteration
    history (sizes, value at the initial belief, elapsed seconds) is recorded
    in the policy metadata.
    """
    if variant not in ("classical", "modified"):
        raise ValueError(f"unknown variant {variant!r}")
    ctx = _StepContext(model, cost, obs)
    n_p = cost.n_periods
    m = model.n_transient

    if thresholds is None:
        thresholds = compute_thresholds(model, cost)
    hat_n = thresholds.hat_n
    tilde_n = thresholds.tilde_n

    # Closed-form tail: a single coefficient vector per period from hat_n on.
    alphas: list[np.ndarray] = [None] * (n_p + 1)  # type: ignore[list-item]
    alphas[n_p] = terminal_cost_vector(model, cost)[None, :]
    for n in range(hat_n, n_p):
        if cost.multi_task:
            raise AssertionError("multi-task runs use the full horizon")
        alphas[n] = upper_continue_vector(model, cost, n)[None, :]

    rng_init = substream(config.seed, 0)
    sets = _simulate_initial_beliefs(ctx, hat_n, config.l1, rng_init)

    e_worst = np.zeros(m)
    e_worst[-1] = 1.0
    vertices = np.eye(m)
    pi0 = model.pi0 / model.pi0.sum()

    multi_flags = None
    if cost.multi_task:
        vab_vertex, vc_vertex = vertex_value_recursion(model, cost)
        multi_flags = vab_vertex <= vc_vertex  # abort optimal at the worst vertex, per period

    history: list[dict] = []
    prev_probe: list[np.ndarray | None] = [None] * (n_p + 1)
    abort_masks: list[np.ndarray | None] = [None] * (n_p + 1)
    value0 = float("nan")
    stop_reason = "max-iterations"
    t_start = time.perf_counter()

    for tau in range(1, config.z1 + 1):
        # Backup sweep, last decision period down to period 1.
        for n in range(hat_n - 1, 0, -1):
            alphas[n], _, abort_masks[n] = _backup_period(ctx, sets[n], alphas[n + 1], n)
        if hat_n > 0:
            alphas[0], values0, _ = _backup_period(ctx, np.atleast_2d(pi0), alphas[1], 0)
            value0 = float(values0[0])
        else:
            alphas[0] = upper_continue_vector(model, cost, 0)[None, :]
            value0 = float(np.min(alphas[0] @ pi0))

        # Convergence probes: current belief points plus the simplex vertices.
        deltas = []
        for n in range(0, hat_n):
            pts = np.vstack([sets[n], vertices]) if n > 0 else np.vstack([pi0[None, :], vertices])
            vals = np.min(pts @ alphas[n].T, axis=1)
            if prev_probe[n] is not None and len(prev_probe[n]) <= len(vals):
                deltas.append(float(np.max(np.abs(vals[: len(prev_probe[n])] - prev_probe[n]))))
            prev_probe[n] = vals
        sup_change = max(deltas) if deltas else 0.0

        history.append(
            {
                "tau": tau,
                "n_beliefs": int(sum(len(s) for s in sets)),
                "value_pi0": value0,
                "elapsed_s": time.perf_counter() - t_start,
                "sup_change": sup_change if tau > 1 else None,
                "n_pruned": 0,
            }
        )

        if gap_target is not None:
            ref, rel = gap_target
            if abs(value0 - ref) <= rel * abs(ref):
                stop_reason = "gap-target"
                break
        if probe_fn is not None and probe_fn(tau, alphas, time.perf_counter() - t_start):
            stop_reason = "probe-stop"
            break
        if tau > 1 and sup_change < config.eps:
            stop_reason = "converged"
            break
        if tau == config.z1:
            break

        # Expansion: grow each period's set with the farthest simulated posterior.
        prune_active = variant == "modified" and tau > config.z2
        worst_flag = False
        if prune_active and tilde_n is not None and hat_n > tilde_n + 1:
            v_ab_w = float(e_worst @ ctx.abort_vec(tilde_n))
            v_c_w, _ = ctx.continue_values(e_worst[None, :], alphas[tilde_n + 1], tilde_n)
            worst_flag = v_ab_w <= float(v_c_w[0])

        snapshot = [s.copy() for s in sets]
        n_pruned = 0
        for n in range(0, hat_n - 1):
            target = n + 1
            if len(sets[target]) >= config.max_beliefs:
                continue
            src = snapshot[n] if n > 0 else np.atleast_2d(pi0)
            rng = substream(config.seed, 1, tau, n)
            posteriors, present = _expansion_candidates(ctx, src, config.n_samples, rng)

            owners = []
            flat = []
            for l in range(len(src)):
                for k in range(ctx.n_signals):
                    if present[l, k]:
                        owners.append(l)
                        flat.append(posteriors[k][l])
            if not flat:
                continue
            flat = np.asarray(flat)
            owners = np.asarray(owners)

            if prune_active:
                include_worst = (
                    (worst_flag and tilde_n is not None and target <= tilde_n)
                    or (multi_flags is not None and bool(multi_flags[target]))
                )
                hull_pts = _abort_hull_points(
                    ctx, snapshot[target], abort_masks[target], include_worst, e_worst, config
                )
                if len(hull_pts):
                    # Only candidates whose own classification is abort can lie
                    # in the hull (the abort set is convex and contains it).
                    keep = np.ones(len(flat), dtype=bool)
                    v_ab_c = flat @ ctx.abort_vec(target)
                    v_c_c, _ = ctx.continue_values(flat, alphas[target + 1], target)
                    hull = _HullTester(hull_pts, config.hull_tol)
                    for i in np.flatnonzero(v_ab_c <= v_c_c):
                        keep[i] = flat[i] not in hull
                    if keep.any():
                        n_pruned += int(len(flat) - keep.sum())
                        flat = flat[keep]
                        owners = owners[keep]
                    else:
                        logger.info(
                            "hull pruning emptied period %d candidates; expanding unpruned", target
                        )

            dists = _min_distances(flat, snapshot[target])
            new_pts = []
            for l in np.unique(owners):
                rows = np.flatnonzero(owners == l)
                best = rows[int(np.argmax(dists[rows]))]
                if dists[best] > 1e-12:
                    new_pts.append(flat[best])
            if new_pts:
                budget = config.max_beliefs - len(sets[target])
                sets[target] = _dedupe_rows(np.vstack([sets[target], np.vstack(new_pts[:budget])]))
        history[-1]["n_pruned"] = n_pruned

    metadata = {
        "solver": f"pbvi-{variant}",
        "config": config.to_json(),
        "seed": config.seed,
        "history": history,
        "stop_reason": stop_reason,
        "value_pi0": value0,
    }
    return AlphaSetPolicy(model, cost, obs, alphas, thresholds, metadata)


def _abort_hull_points(ctx, points, abort_mask, include_worst, e_worst, config):
    pts = (
        points[abort_mask]
        if abort_mask is not None and abort_mask.any()
        else np.zeros((0, ctx.model.n_transient))
    )
    if include_worst:
        pts = np.vstack([pts, e_worst[None, :]]) if len(pts) else e_worst[None, :]
    return _thin_points(pts, config.hull_cap)


class _HullTester:
    """Membership tester for one period's abort hull.

    Beliefs live on the simplex, so the hull is at most (m-1)-dimensional in
    the first m-1 coordinates. Low dimensions use a triangulation lookup;
    higher dimensions fall back to a bounding-box reject plus the feasibility
    program of :func:`hull_membership`.
    """

    def __init__(self, hull_pts: np.ndarray, tol: float):
        self.hull_pts = hull_pts
        self.tol = tol
        self.lo = hull_pts.min(axis=0) - tol
        self.hi = hull_pts.max(axis=0) + tol
        self._tri = None
        self._interval = hull_pts.shape[1] == 2  # the box test settles 1-D hulls
        if not self._interval and hull_pts.shape[1] <= 4 and len(hull_pts) >= hull_pts.shape[1]:
            from scipy.spatial import Delaunay, QhullError

            try:
                self._tri = Delaunay(hull_pts[:, :-1])
            except (QhullError, ValueError):
                self._tri = None  # degenerate cloud; use the LP

    def __contains__(self, cand: np.ndarray) -> bool:
        if np.any(cand < self.lo) or np.any(cand > self.hi):
            return False
        if self._interval:
            return True
        if self._tri is not None:
            return bool(self._tri.find_simplex(cand[None, :-1])[0] >= 0)
        return hull_membership(cand, self.hull_pts, tol=self.tol)


def compute_thresholds(model: SurrogateModel, cost: CostModel) -> ThresholdReport:
    """Threshold certificates driving the solver layout."""
    from .values import never_abort, no_intermediate_check

    if cost.multi_task:
        return ThresholdReport(never_abort=False, hat_n=cost.n_periods, tilde_n=None, no_intermediate=None)
    lam_max = float(np.max(-np.diag(model.q)[:-1]))
    na = never_abort(cost, lam_max)
    hat = find_hat_n(model, cost)
    tilde = find_tilde_n(model, cost)
    return ThresholdReport(
        never_abort=na,
        hat_n=hat,
        tilde_n=tilde,
        no_intermediate=no_intermediate_check(model, cost, hat),
    )


def _interp(grid: np.ndarray, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.interp(np.clip(x, grid[0], grid[-1]), grid, values)


def _intervals_from_mask(stat_grid: np.ndarray, mask: np.ndarray):
    if not mask.any():
        return None
    idx = np.flatnonzero(mask)
    return (float(stat_grid[idx[0]]), float(stat_grid[idx[-1]]))


def exact_backward_ctmc(
    model: SurrogateModel,
    cost: CostModel,
    obs: ObservationModel,
    granularity: float = 0.01,
) -> ControlLimitPolicy:
    """Exact backward induction on the discretized defective probability.

    Applies when there are exactly two transient states (one healthy, one
    defective phase), so the belief is the scalar defective probability and
    the optimal rule is a per-period abort interval on it.
    """
    if model.n_transient != 2:
        raise ValueError("the scalar solver needs exactly two transient states")
    if not 0.0 < granularity <= 0.1:
        raise ValueError("granularity must be in (0, 0.1]")
    ctx = _StepContext(model, cost, obs)
    grid = np.round(np.arange(0.0, 1.0 + granularity / 2.0, granularity), 12)
    beliefs = np.stack([1.0 - grid, grid], axis=1)

    # Per-signal posterior coordinate and likelihood along the grid.
    post, lik = [], []
    for mat in ctx.step_mats:
        unnorm = beliefs @ mat
        tot = unnorm.sum(axis=1)
        lik.append(tot)
        post.append(np.where(tot > 0.0, unnorm[:, 1] / np.where(tot > 0.0, tot, 1.0), 1.0))

    n_p = cost.n_periods
    values = beliefs @ terminal_cost_vector(model, cost)
    intervals: list = [None] * n_p
    value_fns = [None] * (n_p + 1)
    value_fns[n_p] = values
    for n in range(n_p - 1, -1, -1):
        v_ab = beliefs @ ctx.abort_vec(n)
        v_c = continue_stage_coeff(cost, n) * (beliefs @ ctx.pfail_step)
        for k in range(ctx.n_signals):
            v_c = v_c + lik[k] * _interp(grid, values, post[k])
        mask = v_ab <= v_c
        intervals[n] = _intervals_from_mask(grid, mask)
        values = np.where(mask, v_ab, v_c)
        value_fns[n] = values

    thresholds = compute_thresholds(model, cost) if not cost.multi_task else ThresholdReport(
        False, cost.n_periods, None, None
    )
    pi0_stat = float(model.pi0[1])
    metadata = {
        "solver": "exact-backward-ctmc",
        "granularity": granularity,
        "value_pi0": float(_interp(grid, value_fns[0], np.array([pi0_stat]))[0]),
    }
    return ControlLimitPolicy(
        model, cost, obs, "defective-probability", intervals, thresholds, metadata,
        value0=metadata["value_pi0"],
    )


def angle_sequence(model: SurrogateModel, cost: CostModel) -> np.ndarray:
    """Deterministic per-period angle vectors when there is one defective phase.

    Healthy phases share an emission row, so the signal likelihoods cancel in
    every angle coordinate and only the radius depends on the observations.
    Row n holds the angles of any reachable belief at period n.
    """
    if model.m2 != 1:
        raise ValueError("the angle sequence requires a single defective phase")
    m = model.n_transient
    ptilde = model.kernel(cost.delta).ptilde
    _, phi = to_spherical(model.pi0 / model.pi0.sum())
    out = np.empty((cost.n_periods + 1, m - 1))
    out[0] = phi
    for n in range(1, cost.n_periods + 1):
        head, _ = _direction_step(out[n - 1], ptilde)
        total = head.sum()
        phi_n = np.empty(m - 1)
        for i in range(m - 2):
            # angle coordinates i = 1..m1-1 of the updated direction
            denom = np.sqrt(head[0] ** 2 + np.sum(head[i + 1 :] ** 2) + total**2)
            phi_n[i] = np.arccos(np.clip(head[i + 1] / denom, -1.0, 1.0))
        phi_n[m - 2] = np.arccos(np.clip(-total / np.sqrt(head[0] ** 2 + total**2), -1.0, 1.0))
        out[n] = phi_n
    return out


def _direction_from_angles(phi: np.ndarray) -> np.ndarray:
    """Unit-radius displacement from the worst vertex at the given angles."""
    from .beliefs import from_spherical

    m = len(phi) + 1
    e_worst = np.zeros(m)
    e_worst[-1] = 1.0
    return from_spherical(1.0, phi) - e_worst


def _direction_step(phi: np.ndarray, ptilde: np.ndarray):
    """Transient update of the unit direction: healthy head and defective tail."""
    varphi = _direction_from_angles(phi) @ ptilde
    return varphi[:-1], varphi[-1]


def exact_backward_dimred(
    model: SurrogateModel,
    cost: CostModel,
    obs: ObservationModel,
    granularity: float = 0.01,
) -> ControlLimitPolicy:
    """Exact backward induction on the spherical radius (single defective phase).

    The angle sequence is computed once; each period's feasible radius range
    is discretized and the radius recursion maps grid points to the next
    period's grid, where the value function is linearly interpolated.
    """
    if model.m2 != 1:
        raise ValueError("the dimension-reduced solver requires a single defective phase")
    if not 0.0 < granularity <= 0.1:
        raise ValueError("granularity must be in (0, 0.1]")
    ctx = _StepContext(model, cost, obs)
    m = model.n_transient
    n_p = cost.n_periods
    angles = angle_sequence(model, cost)
    p_def_surv = float(ctx.ptilde[m - 1, m - 1])
    d_ratio = ctx.obs.d[1] / ctx.obs.d[0]  # defective over healthy emission odds, per signal

    def radius_grid(n):
        u = _direction_from_angles(angles[n])
        r_max = -1.0 / u[-1]
        n_pts = max(int(np.ceil(r_max / granularity)), 2) + 1
        return np.linspace(0.0, r_max, n_pts), u

    grid_next, u_next = radius_grid(n_p)
    beliefs_next = np.zeros(m)[None, :] + grid_next[:, None] * u_next[None, :]
    beliefs_next[:, -1] += 1.0
    values_next = beliefs_next @ terminal_cost_vector(model, cost)

    intervals: list = [None] * n_p
    value0 = None
    for n in range(n_p - 1, -1, -1):
        grid, u = radius_grid(n)
        beliefs = np.zeros(m)[None, :] + grid[:, None] * u[None, :]
        beliefs[:, -1] += 1.0
        head, tail = _direction_step(angles[n], ctx.ptilde)
        total = head.sum()
        numer = np.sqrt(np.sum(head**2) + total**2)

        v_ab = beliefs @ ctx.abort_vec(n)
        v_c = continue_stage_coeff(cost, n) * (beliefs @ ctx.pfail_step)
        for k in range(ctx.n_signals):
            lik = beliefs @ ctx.ptilde @ ctx.lifted[:, k]
            with np.errstate(divide="ignore"):
                denom = total + (tail + np.where(grid > 0.0, p_def_surv / grid, np.inf)) * d_ratio[k]
            r_next = np.where(grid > 0.0, numer / denom, 0.0)
            v_c = v_c + lik * _interp(grid_next, values_next, r_next)
        mask = v_ab <= v_c
        intervals[n] = _intervals_from_mask(grid, mask)
        values_next = np.where(mask, v_ab, v_c)
        grid_next = grid
        if n == 0:
            value0 = float(_interp(grid, values_next, np.array([spherical_radius(model.pi0)]))[0])

    thresholds = (
        compute_thresholds(model, cost)
        if not cost.multi_task
        else ThresholdReport(False, cost.n_periods, None, None)
    )
    metadata = {"solver": "exact-backward-dimred", "granularity": granularity, "value_pi0": value0}
    return ControlLimitPolicy(
        model, cost, obs, "spherical-radius", intervals, thresholds, metadata,
        angles=angles, value0=value0,
    )


def policy_to_json(policy) -> dict:
    """Versioned policy artifact: thresholds, metadata, and the value tables."""
    base = {
        "schema_version": 1,
        "kind": policy.kind,
        "thresholds": policy.thresholds.to_json(),
        "metadata": {k: v for k, v in policy.metadata.items() if k != "history"},
    }
    if isinstance(policy, AlphaSetPolicy):
        base["alpha_vectors"] = [a.tolist() for a in policy.alphas]
    else:
        base["statistic"] = policy.statistic
        base["intervals"] = [list(iv) if iv is not None else None for iv in policy.intervals]
        if policy.angles is not None:
            base["angles"] = policy.angles.tolist()
    return base
