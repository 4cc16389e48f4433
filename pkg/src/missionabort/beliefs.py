"""Belief-state algebra: Bayes filtering, spherical coordinates, MLR order.

Beliefs are probability vectors over the transient states of the surrogate
chain, represented as plain numpy arrays. Signals are 1..K; signal 0 is
reserved for observed failure and never enters the filter.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .surrogate import is_tp2

__all__ = [
    "ObservationModel",
    "OriginBeliefError",
    "ImpossibleObservationError",
    "validate_belief",
    "bayes_update",
    "obs_likelihood",
    "to_spherical",
    "from_spherical",
    "spherical_radius",
    "mlr_leq",
]

_SUM_TOL = 1e-10
_RENORM_TOL = 1e-6


class OriginBeliefError(ValueError):
    """Raised when converting the spherical origin (the worst vertex) to angles."""


class ImpossibleObservationError(ValueError):
    """Raised when a signal has (numerically) zero likelihood under the belief."""


@dataclass(frozen=True)
class ObservationModel:
    """Row-stochastic 2 x K emission matrix (row 1 healthy, row 2 defective)."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        if d.ndim != 2 or d.shape[0] != 2 or d.shape[1] < 1:
            raise ValueError(f"emission matrix must be 2 x K, got {d.shape}")
        if np.any(d < 0.0) or np.max(np.abs(d.sum(axis=1) - 1.0)) > 1e-10:
            raise ValueError("emission rows must be probability vectors")
        if not is_tp2(d, tol=1e-12):
            warnings.warn("emission matrix is not TP2; MLR monotonicity is not guaranteed", stacklevel=2)

    @property
    def n_signals(self) -> int:
        return self.d.shape[1]

    def lifted(self, m1: int, m2: int) -> np.ndarray:
        """(m1+m2) x K matrix replicating the healthy/defective rows per phase."""
        return np.vstack([np.tile(self.d[0], (m1, 1)), np.tile(self.d[1], (m2, 1))])

    def to_json(self) -> list:
        return self.d.tolist()


def validate_belief(pi: np.ndarray, renormalize: bool = True) -> np.ndarray:
    """Validate simplex membership; small drift is renormalized, large drift rejected."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < -_SUM_TOL):
        raise ValueError("belief entries must be nonnegative")
    drift = abs(pi.sum() - 1.0)
    if drift <= _SUM_TOL:
        return np.clip(pi, 0.0, None)
    if renormalize and drift <= _RENORM_TOL:
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()
    raise ValueError(f"belief drifted off the simplex (|sum - 1| = {drift:.3g})")


def obs_likelihood(belief: np.ndarray, k: int, ptilde: np.ndarray, obs: ObservationModel, m1: int, m2: int) -> float:
    """P(next signal = k | current belief), i.e. pi' Ptilde dtilde_k."""
    if not 1 <= k <= obs.n_signals:
        raise ValueError(f"signal must be in 1..{obs.n_signals}, got {k}")
    dt = obs.lifted(m1, m2)[:, k - 1]
    return float(np.asarray(belief, dtype=float) @ ptilde @ dt)


def bayes_update(
    belief: np.ndarray,
    k: int,
    ptilde: np.ndarray,
    obs: ObservationModel,
    m1: int,
    m2: int,
) -> np.ndarray:
    """Posterior over transient states after stepping dt and observing signal k."""
    if not 1 <= k <= obs.n_signals:
        raise ValueError(f"signal must be in 1..{obs.n_signals}, got {k}")
    belief = validate_belief(belief)
    dt = obs.lifted(m1, m2)[:, k - 1]
    unnorm = (belief @ ptilde) * dt
    norm = unnorm.sum()
    if norm < 1e-300:
        raise ImpossibleObservationError(f"signal {k} has zero likelihood under the belief")
    return unnorm / norm


def spherical_radius(pi: np.ndarray) -> float:
    """Euclidean distance from the belief to the worst vertex e_m (0 at the vertex)."""
    pi = np.asarray(pi, dtype=float)
    delta = pi.copy()
    delta[-1] -= 1.0
    return float(np.sqrt(delta @ delta))


def to_spherical(pi: np.ndarray) -> tuple[float, np.ndarray]:
    """Spherical coordinates (r, phi) anchored at the worst vertex.

    phi has length m-1 with phi_j in [0, pi/2] for j < m-1 and the last angle
    in (pi/2, pi]. The worst vertex itself has r = 0 and undefined angles.
    """
    pi = np.asarray(pi, dtype=float)
    m = len(pi)
    if m < 2:
        raise ValueError("belief must have at least two states")
    r = spherical_radius(pi)
    if r == 0.0:
        raise OriginBeliefError("the worst vertex is the spherical origin; angles are undefined")
    last = pi[m - 1] - 1.0
    phi = np.empty(m - 1)
    # Tail sums D_j^2 = sum_{i>j, i<m} pi_i^2 + (pi_m - 1)^2 + pi_1^2
    tail = last * last + pi[0] * pi[0]
    d2 = np.empty(m - 1)  # d2[j-1] corresponds to D_j^2, j = 1..m-1
    for j in range(m - 2, 0, -1):
        tail += pi[j] * pi[j]
        d2[j - 1] = tail
    d2[m - 2] = last * last + pi[0] * pi[0]
    for j in range(1, m - 1):
        denom = np.sqrt(d2[j - 1])
        phi[j - 1] = np.arccos(np.clip(pi[j] / denom, -1.0, 1.0)) if denom > 0.0 else 0.0
    denom = np.sqrt(d2[m - 2])
    phi[m - 2] = np.arccos(np.clip(last / denom, -1.0, 1.0))
    return r, phi


def from_spherical(r: float, phi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_spherical`; r = 0 maps to the worst vertex."""
    phi = np.asarray(phi, dtype=float)
    m = len(phi) + 1
    pi = np.zeros(m)
    if r == 0.0:
        pi[m - 1] = 1.0
        return pi
    sin_prod = np.concatenate([[1.0], np.cumprod(np.sin(phi))])  # sin_prod[j] = prod_{k<=j} sin(phi_k)
    cos = np.cos(phi)
    if m >= 2:
        # pi_j = r cos(phi_{j-1}) prod_{k<j-1} sin(phi_k) for j = 2..m-1
        for j in range(2, m):
            pi[j - 1] = r * cos[j - 2] * sin_prod[j - 2]
        pi[m - 1] = 1.0 + r * cos[m - 2] * sin_prod[m - 2]
        pi[0] = -r * float(np.sum(cos * sin_prod[:-1]))
    return pi


def mlr_leq(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool | None:
    """Likelihood-ratio comparison of two beliefs.

    True if a <= b in the MLR order, False if instead b <= a, and None when
    the pair is incomparable. Larger means closer to failure.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("beliefs must have equal length")
    # a <= b iff a_i b_j <= a_j b_i for all i > j
    outer_ab = np.outer(a, b)
    diff = outer_ab.T - outer_ab  # [i, j] = a_j b_i - a_i b_j
    lower = np.tril(diff, k=-1)   # rows i > columns j
    a_leq_b = lower.min() >= -tol
    b_leq_a = np.tril(-diff, k=-1).min() >= -tol
    if a_leq_b:
        return True
    if b_leq_a:
        return False
    return None
