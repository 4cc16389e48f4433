"""Shared fixtures: the UAV case-study instances used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from missionabort.beliefs import ObservationModel
from missionabort.distributions import Mixture, Weibull, moment_match_rate
from missionabort.surrogate import SurrogateModel, build_surrogate_deterministic
from missionabort.values import CostModel

CASE_D = np.array([[0.737, 0.263], [0.101, 0.899]])
ZETA = 1e-3
NU = 8.01e-3
M1 = 2
WEIBULL_F = Weibull(shape=2.3, scale=108.8)
MIXTURE_F = Mixture(
    weights=[0.5, 0.5],
    components=[Weibull(shape=2.6, scale=180.8), Weibull(shape=2.3, scale=36.3)],
)


def ramp_rescue(n_periods: int, cap: float = 25.0) -> np.ndarray:
    return np.minimum(np.arange(n_periods + 1, dtype=float), cap)


@pytest.fixture(scope="session")
def obs_model() -> ObservationModel:
    return ObservationModel(CASE_D)


@pytest.fixture(scope="session")
def weibull_model() -> SurrogateModel:
    lam = moment_match_rate(WEIBULL_F, 20)
    return build_surrogate_deterministic(NU, M1, WEIBULL_F, ZETA, 20, lam)


@pytest.fixture(scope="session")
def mixture_model() -> SurrogateModel:
    lam = moment_match_rate(MIXTURE_F, 50)
    return build_surrogate_deterministic(NU, M1, MIXTURE_F, ZETA, 50, lam)


@pytest.fixture(scope="session")
def single_cost() -> CostModel:
    return CostModel(cs=2000.0, cm=2000.0, delta=1.0, n_periods=160, w=ramp_rescue(160))


@pytest.fixture(scope="session")
def small_instance() -> SurrogateModel:
    q = np.array(
        [
            [-2.75e-3, 2.29e-3, 0.0, 4.59e-4],
            [0.0, -1.04e-2, 6.92e-3, 3.46e-3],
            [0.0, 0.0, -2.86e-2, 2.86e-2],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )
    # The stated generator rounds to three figures; rebalance the diagonal.
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return SurrogateModel(
        q=q, pi0=np.array([1.0, 0.0, 0.0]), m1=1, m2=2, lam=2.86e-2, zeta=4.59e-4, variant="explicit"
    )
