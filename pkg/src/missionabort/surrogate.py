"""Absorbing surrogate CTMC for the three-state deterioration process.

The chain has m1 healthy phases, m2 defective phases, and one absorbing
failure state. Two constructions are supported: the mixture-start scheme
(random initial phase encodes the healthy-sojourn mixture, uniform exit rate
lambda out of every transient state) and the deterministic-start scheme used
when the healthy sojourn is exactly Erlang (start in phase 1, healthy phases
advance at their own rate nu). Arbitrary upper-triangular absorbing
generators can also be wrapped directly.

Transition kernels are computed by uniformization and cached per model, so
repeated horizon lookups (the per-period step and the rescue times) cost one
matrix exponential each.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution

__all__ = [
    "SurrogateModel",
    "TransitionKernel",
    "build_surrogate",
    "build_surrogate_deterministic",
    "kappa",
    "absorption_sample",
    "check_hazard_monotone",
    "is_tp2",
    "model_to_json",
    "model_from_json",
]

MIXTURE_START = "erlang-mixture-start"
DETERMINISTIC_START = "deterministic-start"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class TransitionKernel:
    """Stochastic matrix P(t) of the chain and its transient-to-transient block."""

    dt: float
    p: np.ndarray       # (m+1, m+1), rows sum to 1
    ptilde: np.ndarray  # leading (m, m) block

    @property
    def p_fail(self) -> np.ndarray:
        """Absorption probabilities within dt from each transient state."""
        return self.p[:-1, -1]


@dataclass
class SurrogateModel:
    """Absorbing CTMC with ``m1 + m2`` transient states and one failure state."""

    q: np.ndarray        # (m+1, m+1) generator; last row identically 0
    pi0: np.ndarray      # initial belief over the m transient states
    m1: int
    m2: int
    lam: float           # shared exit rate of the mixture-start scheme
    zeta: float
    variant: str = MIXTURE_START
    _kernels: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.pi0 = np.asarray(self.pi0, dtype=float)
        m = self.m1 + self.m2
        if self.q.shape != (m + 1, m + 1):
            raise ValueError(f"generator must be {(m + 1, m + 1)}, got {self.q.shape}")
        if self.pi0.shape != (m,):
            raise ValueError(f"initial belief must have length {m}")
        _validate_generator(self.q)
        if np.any(self.pi0 < -1e-12) or abs(self.pi0.sum() - 1.0) > 1e-10:
            raise ValueError("initial belief must be a probability vector over transient states")

    @property
    def n_transient(self) -> int:
        return self.m1 + self.m2

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.q)[:-1]

    def kernel(self, t: float) -> TransitionKernel:
        """P(t) by uniformization; cached by the time value."""
        if t < 0.0:
            raise ValueError(f"time must be nonnegative, got {t}")
        key = float(t)
        with self._lock:
            hit = self._kernels.get(key)
        if hit is not None:
            return hit
        p = _expm_uniformized(self.q, key)
        kern = TransitionKernel(dt=key, p=p, ptilde=p[:-1, :-1].copy())
        with self._lock:
            self._kernels.setdefault(key, kern)
        return kern


def _validate_generator(q: np.ndarray, tol: float = 1e-12) -> None:
    scale = max(np.abs(q).max(), 1.0)
    if np.abs(q.sum(axis=1)).max() > tol * scale:
        raise ValueError("generator rows must sum to 0")
    off = q - np.diag(np.diag(q))
    if off.min() < -tol * scale:
        raise ValueError("off-diagonal generator entries must be nonnegative")
    if np.abs(q[-1]).max() > 0.0:
        raise ValueError("absorbing row must be identically 0")


def _expm_uniformized(q: np.ndarray, t: float, tail: float = 1e-12) -> np.ndarray:
    """exp(Q t) as a Poisson-weighted power series of the uniformized chain."""
    n = q.shape[0]
    if t == 0.0:
        return np.eye(n)
    rate = float(np.max(-np.diag(q)))
    if rate <= 0.0:
        return np.eye(n)
    mu = rate * t
    if mu > 200.0:
        # Halve until the Poisson mean is moderate, then square back up.
        half = _expm_uniformized(q, t / 2.0, tail)
        p = half @ half
        np.clip(p, 0.0, 1.0, out=p)
        return p / p.sum(axis=1, keepdims=True)
    u = np.eye(n) + q / rate
    weight = math.exp(-mu)
    term = np.eye(n)
    acc = weight * term
    total = weight
    k = 0
    while 1.0 - total > tail and k < 10_000:
        k += 1
        term = term @ u
        weight *= mu / k
        acc += weight * term
        total += weight
    # Distribute the truncated tail mass proportionally to keep rows stochastic.
    return acc / acc.sum(axis=1, keepdims=True)


def build_surrogate(
    g: Distribution,
    f: Distribution,
    zeta: float,
    m1: int,
    m2: int,
    lam: float,
) -> SurrogateModel:
    """Mixture-start surrogate: healthy-phase mixture start, uniform exit rate ``lam``.

    Healthy phases advance at ``lam - zeta`` and fail directly at ``zeta``;
    defective phase i fails at ``lam * p_i`` and advances at ``lam * (1 - p_i)``
    where p_i is the conditional CDF increment of ``f`` on the 1/lam grid.
    """
    if zeta < 0.0:
        raise ValueError(f"zeta must be nonnegative, got {zeta}")
    if not lam > zeta:
        raise ValueError(f"lam must exceed zeta, got lam={lam}, zeta={zeta}")
    if m1 < 1 or m2 < 1:
        raise ValueError("m1 and m2 must be at least 1")

    pi0 = _mixture_start_belief(g, m1, m2, lam - zeta)
    jump = _conditional_jump_probs(f, m2, lam)
    m = m1 + m2
    q = np.zeros((m + 1, m + 1))
    for i in range(m1):
        q[i, i + 1] = lam - zeta
        q[i, m] = zeta
        q[i, i] = -lam
    for j in range(m2 - 1):
        i = m1 + j
        q[i, i + 1] = lam * (1.0 - jump[j])
        q[i, m] = lam * jump[j]
        q[i, i] = -lam
    q[m - 1, m] = lam
    q[m - 1, m - 1] = -lam
    return SurrogateModel(q=q, pi0=pi0, m1=m1, m2=m2, lam=lam, zeta=zeta, variant=MIXTURE_START)


def build_surrogate_deterministic(
    nu: float,
    m1: int,
    f: Distribution,
    zeta: float,
    m2: int,
    lam: float,
) -> SurrogateModel:
    """Deterministic-start surrogate for an exactly-Erlang healthy sojourn.

    The chain starts in phase 1 with probability one and healthy phases
    advance at ``nu`` (the Erlang rate of the healthy sojourn); the defective
    block is the same as in :func:`build_surrogate`.
    """
    if not nu > 0.0:
        raise ValueError(f"nu must be positive, got {nu}")
    if zeta < 0.0:
        raise ValueError(f"zeta must be nonnegative, got {zeta}")
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    if m1 < 1 or m2 < 1:
        raise ValueError("m1 and m2 must be at least 1")

    jump = _conditional_jump_probs(f, m2, lam)
    m = m1 + m2
    q = np.zeros((m + 1, m + 1))
    for i in range(m1):
        q[i, i + 1] = nu
        q[i, m] = zeta
        q[i, i] = -(nu + zeta)
    for j in range(m2 - 1):
        i = m1 + j
        q[i, i + 1] = lam * (1.0 - jump[j])
        q[i, m] = lam * jump[j]
        q[i, i] = -lam
    q[m - 1, m] = lam
    q[m - 1, m - 1] = -lam
    pi0 = np.zeros(m)
    pi0[0] = 1.0
    return SurrogateModel(q=q, pi0=pi0, m1=m1, m2=m2, lam=lam, zeta=zeta, variant=DETERMINISTIC_START)


def _mixture_start_belief(g: Distribution, m1: int, m2: int, rate: float) -> np.ndarray:
    """Initial phase probabilities: phase i carries the weight of Erlang shape m1+1-i."""
    pi0 = np.zeros(m1 + m2)
    grid = np.asarray(g.cdf(np.arange(0, m1 + 1) / rate), dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ArithmeticError("non-finite CDF evaluation for the healthy-sojourn distribution")
    pi0[0] = 1.0 - grid[m1 - 1]
    for i in range(2, m1 + 1):
        pi0[i - 1] = grid[m1 + 1 - i] - grid[m1 - i]
    pi0 = np.clip(pi0, 0.0, None)
    return pi0 / pi0.sum()


def _conditional_jump_probs(f: Distribution, m2: int, lam: float) -> np.ndarray:
    """p_i = P(T in (i-1, i]/lam | T > (i-1)/lam) for i = 1..m2-1."""
    if m2 == 1:
        return np.zeros(0)
    grid = np.asarray(f.cdf(np.arange(0, m2) / lam), dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ArithmeticError("non-finite CDF evaluation for the defective-sojourn distribution")
    denom = 1.0 - grid[:-1]
    if np.any(denom <= 0.0):
        raise ValueError(
            "defective-sojourn CDF saturates before the last phase; reduce m2 or increase lam"
        )
    return np.clip(np.diff(grid) / denom, 0.0, 1.0)


def kappa(model: SurrogateModel, belief: np.ndarray, t: float) -> float:
    """Probability of failure within ``t`` from belief ``belief``."""
    belief = np.asarray(belief, dtype=float)
    return float(belief @ model.kernel(t).p_fail)


def absorption_sample(model: SurrogateModel, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Absorption times of the chain, sampled from the embedded jump chain."""
    m = model.n_transient
    rates = model.exit_rates
    # Jump distribution of each transient state.
    jump = model.q[:-1].copy()
    np.fill_diagonal(jump[:, :-1], 0.0)
    jump = jump / rates[:, None]
    cum = np.cumsum(jump, axis=1)

    state = rng.choice(m, size=size, p=model.pi0 / model.pi0.sum())
    t = np.zeros(size)
    active = np.ones(size, dtype=bool)
    # States only advance, so at most m jumps reach absorption.
    for _ in range(m + 1):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        s = state[idx]
        t[idx] += rng.exponential(1.0 / rates[s])
        u = rng.random(len(idx))
        nxt = (u[:, None] > cum[s]).sum(axis=1)
        state[idx] = nxt
        active[idx] = nxt < m
    if active.any():
        raise RuntimeError("jump chain failed to absorb; generator is not upper-triangular")
    return t


def check_hazard_monotone(model: SurrogateModel) -> int | None:
    """Check the failure rates out of the transient states are nondecreasing.

    Returns None when the direct-failure rates q_{i,fail} are nondecreasing
    across the defective phases and the first defective phase fails faster
    than zeta; otherwise the first violating state index (0-based).
    """
    q_fail = model.q[:-1, -1]
    if model.m2 >= 1 and not q_fail[model.m1] > model.zeta:
        return model.m1
    for i in range(model.m1, model.n_transient - 1):
        if q_fail[i + 1] < q_fail[i] - 1e-12:
            return i + 1
    return None


def defective_block_monotone(model: SurrogateModel) -> bool:
    """Weaker certificate: failure rates nondecreasing within the defective block.

    This is what the surrogate's conditional failure rate being nondecreasing
    actually requires; the stronger :func:`check_hazard_monotone` additionally
    compares the first defective phase against the direct-failure rate zeta.
    """
    q_fail = model.q[model.m1 : model.n_transient, -1]
    return bool(np.all(np.diff(q_fail) >= -1e-12))


def is_tp2(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff every 2x2 minor of the nonnegative matrix is >= -tol."""
    a = np.asarray(matrix, dtype=float)
    if np.any(a < -tol):
        return False
    nrows = a.shape[0]
    for i in range(nrows - 1):
        for ip in range(i + 1, nrows):
            # minors over all column pairs k < k' at once
            prod = np.outer(a[i], a[ip, :])
            minors = prod - prod.T  # [k, k'] = a[i,k] a[ip,k'] - a[i,k'] a[ip,k]
            if np.min(np.triu(minors, k=1)) < -tol:
                return False
    return True


def model_to_json(model: SurrogateModel) -> dict:
    return {
        "m1": model.m1,
        "m2": model.m2,
        "lambda": model.lam,
        "zeta": model.zeta,
        "variant": model.variant,
        "q": model.q.tolist(),
        "pi0": model.pi0.tolist(),
    }


def model_from_json(obj: dict | str) -> SurrogateModel:
    if isinstance(obj, str):
        obj = json.loads(obj)
    return SurrogateModel(
        q=np.asarray(obj["q"], dtype=float),
        pi0=np.asarray(obj["pi0"], dtype=float),
        m1=int(obj["m1"]),
        m2=int(obj["m2"]),
        lam=float(obj["lambda"]),
        zeta=float(obj["zeta"]),
        variant=str(obj.get("variant", EXPLICIT)),
    )
