"""Positive continuous distributions and Erlang-mixture approximants.

The sojourn times of the deterioration process live on [0, inf). This module
provides the handful of families the toolkit needs (exponential, Erlang,
Weibull, finite mixtures), plus the machinery that approximates an arbitrary
member by a mixture of Erlang distributions sharing a single rate: the
discretized-CDF weight construction, moment matching of the shared rate, and
the sup-norm fit diagnostic.

All distributions are immutable values; sampling takes a caller-owned
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincinv, gammaln

__all__ = [
    "Distribution",
    "Exponential",
    "Erlang",
    "Weibull",
    "Mixture",
    "ErlangMixture",
    "erlang_mixture_approx",
    "moment_match_rate",
    "sup_norm_error",
    "distribution_from_json",
]

_WEIGHT_TOL = 1e-12


class Distribution:
    """Base class: a continuous distribution supported on [0, inf)."""

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def hazard(self, t):
        """Failure rate pdf/sf; inf where the survival function is 0."""
        t = np.asarray(t, dtype=float)
        sf = np.asarray(self.sf(t), dtype=float)
        pdf = np.asarray(self.pdf(t), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(sf > 0.0, pdf / sf, np.inf)
        return out if out.ndim else float(out)

    def quantile(self, p: float) -> float:
        """Smallest t with CDF(t) >= p, solved by bracketed bisection."""
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must be in (0, 1), got {p}")
        upper = max(self.mean(), 1.0)
        while self.cdf(upper) <= p:
            upper *= 2.0
            if upper > 1e18:
                raise ArithmeticError("quantile bracket expansion failed")
        lo, hi = 0.0, upper
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < p:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return -np.expm1(-self.rate * np.maximum(t, 0.0))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, self.rate * np.exp(-self.rate * t), 0.0)

    def mean(self) -> float:
        return 1.0 / self.rate

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must be in (0, 1), got {p}")
        return -math.log1p(-p) / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size=size)

    def to_json(self) -> dict:
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Erlang(Distribution):
    shape: int
    rate: float

    def __post_init__(self):
        if not (isinstance(self.shape, (int, np.integer)) and self.shape >= 1):
            raise ValueError(f"shape must be a positive integer, got {self.shape}")
        if not self.rate > 0.0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    def cdf(self, t):
        # Regularized lower incomplete gamma; stable for large shapes.
        t = np.asarray(t, dtype=float)
        return gammainc(self.shape, self.rate * np.maximum(t, 0.0))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.maximum(t, 0.0)
        with np.errstate(divide="ignore"):
            logpdf = (
                self.shape * math.log(self.rate)
                + (self.shape - 1) * np.log(np.where(tt > 0, tt, 1.0))
                - self.rate * tt
                - gammaln(self.shape)
            )
        out = np.where(t > 0.0, np.exp(logpdf), 0.0)
        if self.shape == 1:
            out = np.where(t == 0.0, self.rate, out)
        return out

    def mean(self) -> float:
        return self.shape / self.rate

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must be in (0, 1), got {p}")
        return float(gammaincinv(self.shape, p)) / self.rate

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)

    def to_json(self) -> dict:
        return {"kind": "erlang", "shape": int(self.shape), "rate": self.rate}


@dataclass(frozen=True)
class Weibull(Distribution):
    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape > 0.0:
            raise ValueError(f"shape must be positive, got {self.shape}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return -np.expm1(-((np.maximum(t, 0.0) / self.scale) ** self.shape))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.where(t > 0.0, t, 1.0)
        z = tt / self.scale
        out = (self.shape / self.scale) * z ** (self.shape - 1.0) * np.exp(-(z**self.shape))
        return np.where(t > 0.0, out, 0.0)

    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must be in (0, 1), got {p}")
        return self.scale * (-math.log1p(-p)) ** (1.0 / self.shape)

    def sample(self, rng, size=None):
        return self.scale * rng.weibull(self.shape, size=size)

    def to_json(self) -> dict:
        return {"kind": "weibull", "shape": self.shape, "scale": self.scale}


class Mixture(Distribution):
    """Finite mixture of positive distributions."""

    def __init__(self, weights, components):
        weights = np.asarray(weights, dtype=float)
        components = tuple(components)
        if len(weights) != len(components) or len(components) == 0:
            raise ValueError("weights and components must be equal-length and nonempty")
        if np.any(weights < 0.0):
            raise ValueError("mixture weights must be nonnegative")
        if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"mixture weights must sum to 1, got {weights.sum()!r}")
        self.weights = weights
        self.components = components

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t, dtype=float)
        for w, c in zip(self.weights, self.components):
            out = out + w * c.cdf(t)
        return out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t, dtype=float)
        for w, c in zip(self.weights, self.components):
            out = out + w * c.pdf(t)
        return out

    def mean(self) -> float:
        return float(sum(w * c.mean() for w, c in zip(self.weights, self.components)))

    def sample(self, rng, size=None):
        # Component draw, then a draw from that component.
        if size is None:
            idx = rng.choice(len(self.components), p=self.weights)
            return self.components[idx].sample(rng)
        idx = rng.choice(len(self.components), size=size, p=self.weights)
        out = np.empty(size, dtype=float)
        for j, c in enumerate(self.components):
            mask = idx == j
            n = int(mask.sum())
            if n:
                out[mask] = c.sample(rng, size=n)
        return out

    def to_json(self) -> dict:
        return {
            "kind": "mixture",
            "weights": [float(w) for w in self.weights],
            "components": [c.to_json() for c in self.components],
        }

    def __repr__(self):
        return f"Mixture(weights={self.weights.tolist()}, components={list(self.components)})"


class ErlangMixture(Distribution):
    """Convex combination of Erlang distributions sharing one rate.

    ``weights[i-1]`` is the mass on the Erlang with shape ``i`` (i = 1..m).
    """

    def __init__(self, rate: float, weights):
        if not rate > 0.0:
            raise ValueError(f"rate must be positive, got {rate}")
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or len(weights) == 0:
            raise ValueError("weights must be a nonempty vector")
        if np.any(weights < -_WEIGHT_TOL):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
        self.rate = float(rate)
        self.weights = np.clip(weights, 0.0, None)
        self.m = len(weights)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        x = (self.rate * np.maximum(t, 0.0)).ravel()
        shapes = np.arange(1, self.m + 1, dtype=float)
        vals = gammainc(shapes[:, None], x[None, :])  # (m, n)
        out = (self.weights @ vals).reshape(t.shape)
        return out if out.ndim else float(out)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=float)
        for i, w in enumerate(self.weights, start=1):
            if w > 0.0:
                out = out + w * Erlang(i, self.rate).pdf(t)
        return out

    def mean(self) -> float:
        shapes = np.arange(1, self.m + 1, dtype=float)
        return float(self.weights @ shapes) / self.rate

    def sample(self, rng, size=None):
        shape = rng.choice(np.arange(1, self.m + 1), size=size, p=self.weights)
        return rng.gamma(shape, 1.0 / self.rate, size=size)

    def to_json(self) -> dict:
        return {"kind": "erlang-mixture", "rate": self.rate, "weights": [float(w) for w in self.weights]}

    def __repr__(self):
        return f"ErlangMixture(rate={self.rate}, m={self.m})"


def erlang_mixture_approx(dist: Distribution, m: int, rate: float) -> ErlangMixture:
    """Erlang-mixture approximant of ``dist`` with ``m`` phases at a shared rate.

    The weight on shape i < m is the CDF increment of ``dist`` over
    ((i-1)/rate, i/rate]; the final shape absorbs the remaining tail mass, so
    the weights always form a probability vector.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"m must be a positive integer, got {m}")
    if not rate > 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    grid = np.arange(0, m) / rate
    cdf = np.asarray(dist.cdf(grid), dtype=float)
    if not np.all(np.isfinite(cdf)):
        raise ArithmeticError("non-finite CDF evaluation while building the approximant")
    weights = np.empty(m, dtype=float)
    weights[: m - 1] = np.diff(cdf)
    weights[m - 1] = 1.0 - cdf[m - 1]
    weights = np.clip(weights, 0.0, None)
    return ErlangMixture(rate, weights / weights.sum())


def moment_match_rate(
    dist: Distribution,
    m: int,
    bracket: tuple[float, float] = (1e-6, 1e3),
    rtol: float = 1e-9,
) -> float:
    """Shared rate at which the m-phase approximant's mean equals ``dist.mean()``.

    The approximant mean is continuous and decreasing in the rate for fixed m
    (finer bins reduce upward rounding, a shorter grid truncates more tail),
    so a bracketed root search applies.
    """
    target = dist.mean()
    if not np.isfinite(target) or target <= 0.0:
        raise ValueError("distribution must have a finite positive mean")

    def gap(rate):
        return erlang_mixture_approx(dist, m, rate).mean() - target

    lo, hi = bracket
    glo, ghi = gap(lo), gap(hi)
    if glo * ghi > 0.0:
        raise ArithmeticError(
            f"no moment-matching rate in bracket [{lo}, {hi}]: gap({lo})={glo:.3g}, gap({hi})={ghi:.3g}"
        )
    rate = brentq(gap, lo, hi, rtol=1e-14, maxiter=200)
    if abs(gap(rate)) > rtol * target:
        raise ArithmeticError("moment matching did not converge to requested tolerance")
    return float(rate)


def sup_norm_error(dist: Distribution, approx: Distribution, horizon: float, max_step: float | None = None) -> float:
    """Max |CDF difference| between ``dist`` and ``approx`` on a dense grid over [0, horizon]."""
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    step = horizon / 1e4 if max_step is None else min(max_step, horizon / 1e4)
    n = int(math.ceil(horizon / step)) + 1
    grid = np.linspace(0.0, horizon, n)
    return float(np.max(np.abs(np.asarray(dist.cdf(grid)) - np.asarray(approx.cdf(grid)))))


def distribution_from_json(obj: dict) -> Distribution:
    """Decode the canonical JSON encoding of a distribution."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"not a distribution object: {obj!r}")
    kind = obj["kind"]
    if kind == "exponential":
        return Exponential(rate=float(obj["rate"]))
    if kind == "erlang":
        return Erlang(shape=int(obj["shape"]), rate=float(obj["rate"]))
    if kind == "weibull":
        return Weibull(shape=float(obj["shape"]), scale=float(obj["scale"]))
    if kind == "mixture":
        return Mixture(
            weights=[float(w) for w in obj["weights"]],
            components=[distribution_from_json(c) for c in obj["components"]],
        )
    if kind == "erlang-mixture":
        return ErlangMixture(rate=float(obj["rate"]), weights=[float(w) for w in obj["weights"]])
    raise ValueError(f"unknown distribution kind: {kind!r}")
