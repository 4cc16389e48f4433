"""Independent brute-force oracles used by the test suite only.

These deliberately avoid the solver code paths they are checking: value
functions are computed by dense backward induction over a discretized belief
simplex, with the Bayes update applied pointwise and linear (barycentric)
interpolation between grid nodes.
"""

from __future__ import annotations

import numpy as np

from missionabort.values import (
    abort_cost_vector,
    continue_stage_coeff,
    terminal_cost_vector,
)


def simplex_grid_value(model, cost, obs, granularity=1e-3):
    """Exact-in-the-limit value at the initial belief for a 3-transient-state model.

    Discretizes the 2-simplex of beliefs (pi2, pi3) on a triangular grid and
    runs full backward induction, interpolating the next-period value at the
    Bayes-updated points. Returns (value at pi0, periods swept).
    """
    m = model.n_transient
    if m != 3:
        raise ValueError("the triangular-grid oracle is written for three transient states")
    h = granularity
    g = int(round(1.0 / h))
    # enumerate grid nodes (i, j) with i + j <= g; node index via row offsets
    counts = g + 1 - np.arange(g + 1)
    offsets = np.concatenate([[0], np.cumsum(counts)])  # offsets[i] = first index of row i
    n_nodes = int(offsets[-1])
    ii = np.repeat(np.arange(g + 1), counts)
    jj = np.concatenate([np.arange(c) for c in counts])
    pi2 = ii * h
    pi3 = jj * h
    beliefs = np.stack([1.0 - pi2 - pi3, pi2, pi3], axis=1)

    def node_index(i, j):
        return offsets[i] + j

    def interp_plan(x, y):
        """Barycentric weights of (x, y) in grid units on the triangular mesh."""
        x = np.clip(x, 0.0, g)
        y = np.clip(y, 0.0, g)
        over = x + y > g
        if over.any():
            scale = g / (x + y)
            x = np.where(over, x * scale, x)
            y = np.where(over, y * scale, y)
        i0 = np.minimum(x.astype(int), g - 1)
        j0 = np.minimum(y.astype(int), g - 1)
        fx = x - i0
        fy = y - j0
        lower = fx + fy <= 1.0
        idx_a = np.where(lower, node_index(i0, j0), node_index(i0 + 1, j0 + 1))
        idx_b = np.where(lower, node_index(i0 + 1, j0), node_index(i0, j0 + 1))
        idx_c = np.where(lower, node_index(i0, j0 + 1), node_index(i0 + 1, j0))
        w_a = np.where(lower, 1.0 - fx - fy, fx + fy - 1.0)
        w_b = np.where(lower, fx, 1.0 - fx)
        w_c = np.where(lower, fy, 1.0 - fy)
        return (idx_a, idx_b, idx_c), (w_a, w_b, w_c)

    kern = model.kernel(cost.delta)
    lifted = obs.lifted(model.m1, model.m2)
    plans = []
    liks = []
    for k in range(obs.n_signals):
        unnorm = (beliefs @ kern.ptilde) * lifted[:, k][None, :]
        tot = unnorm.sum(axis=1)
        liks.append(tot)
        safe = np.where(tot > 0.0, tot, 1.0)
        plans.append(interp_plan(unnorm[:, 1] / safe / h, unnorm[:, 2] / safe / h))

    values = beliefs @ terminal_cost_vector(model, cost)
    for n in range(cost.n_periods - 1, -1, -1):
        v_ab = beliefs @ abort_cost_vector(model, cost, n)
        v_c = continue_stage_coeff(cost, n) * (beliefs @ kern.p_fail)
        for k in range(obs.n_signals):
            (ia, ib, ic), (wa, wb, wc) = plans[k]
            v_c = v_c + liks[k] * (wa * values[ia] + wb * values[ib] + wc * values[ic])
        values = np.minimum(v_ab, v_c)

    x0 = model.pi0[1] / h
    y0 = model.pi0[2] / h
    (ia, ib, ic), (wa, wb, wc) = interp_plan(np.array([x0]), np.array([y0]))
    v0 = float(wa[0] * values[ia[0]] + wb[0] * values[ib[0]] + wc[0] * values[ic[0]])
    return v0, cost.n_periods
