"""Solve a small abort problem three ways and inspect the policy structure.

Uses a fully Markovian instance (both sojourns exponential) so the exact
scalar solver applies, then cross-checks the dimension-reduced solver and the
point-based solver against it.

    python3 demos/03_solve_policy.py
"""

import numpy as np

from missionabort import CostModel, Exponential, ObservationModel, PbviConfig
from missionabort.solvers import exact_backward_ctmc, exact_backward_dimred, pbvi
from missionabort.surrogate import build_surrogate

model = build_surrogate(
    g=Exponential(4.0e-3), f=Exponential(1.04e-2), zeta=1e-3, m1=1, m2=1, lam=1.14e-2
)
cost = CostModel(
    cs=2000.0, cm=2000.0, delta=1.0, n_periods=160,
    w=np.minimum(np.arange(161, dtype=float), 25.0),
)
obs = ObservationModel(np.array([[0.737, 0.263], [0.101, 0.899]]))

scalar = exact_backward_ctmc(model, cost, obs, granularity=0.005)
radial = exact_backward_dimred(model, cost, obs, granularity=0.005)
point = pbvi(model, cost, obs, PbviConfig(l1=8, z1=12, z2=5, n_samples=128, seed=0), "modified")

print(f"thresholds: abort never pays from period {scalar.thresholds.hat_n} on,")
print(f"and pays at the worst belief up to period {scalar.thresholds.tilde_n}.\n")

print(f"value at the initial belief: scalar {scalar.value0:.1f}, radial {radial.value0:.1f}, "
      f"point-based {point.metadata['value_pi0']:.1f}\n")

print("abort interval of the defective probability, sampled periods:")
for n in (0, 40, 80, 120, 150):
    iv = scalar.intervals[n]
    print(f"  n={n:>3}: " + (f"abort for {iv[0]:.2f} <= belief <= {iv[1]:.2f}" if iv else "never abort"))

print("\naction agreement between the three policies on random beliefs:")
rng = np.random.default_rng(1)
beliefs = rng.dirichlet(np.ones(2), size=2000)
for n in (20, 80, 140):
    a = scalar.abort_batch(n, beliefs)
    b = radial.abort_batch(n, beliefs)
    c = point.abort_batch(n, beliefs)
    print(f"  n={n:>3}: scalar-vs-radial {np.mean(a == b):.3f}, scalar-vs-point {np.mean(a == c):.3f}")
