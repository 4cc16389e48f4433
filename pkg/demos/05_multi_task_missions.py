"""Abort decisions across a sequence of tasks with end-of-day inspection.

Three consecutive tasks share one airframe; aborting forfeits the unfinished
tasks, and an inspection after the run charges a repair cost if the system
comes back defective. The rescue time dips while the vehicle approaches each
site, so the schedule is not monotone and the single-task threshold theory
does not apply; the solver backs up the full horizon instead.

    python3 demos/05_multi_task_missions.py
"""

import numpy as np

from missionabort.experiments import build_cost, build_truth, load_config
from missionabort.presets import preset_config, three_site_rescue
from missionabort.values import multi_no_abort, multi_no_abort_after

cfg = load_config(preset_config("multi-ec41"))
cost = build_cost(cfg)
truth = build_truth(cfg)

w = np.array([three_site_rescue(n) for n in range(cost.n_periods + 1)])
print("rescue-time profile (min) at selected periods:")
for n in (0, 20, 40, 72, 90, 122, 135):
    print(f"  n={n:>3}: w = {w[n]:.2f}")
print(f"non-monotone: {bool(np.any(np.diff(w) < 0))}\n")

lam = 0.209  # mixture fit at 50 phases
print(f"continue-everywhere certificate: {multi_no_abort(cost, lam)}")
print("never-abort-after-task-l certificates:")
from missionabort.experiments import build_model

model, _ = build_model(cfg, truth)
for l in range(3):
    flag = multi_no_abort_after(l, model, cost, model.lam)
    print(f"  after completing task {l}: {flag}")
print("\nAll certificates are false here: aborting can pay at any stage, so")
print("the point-based solver runs over all 135 periods. The full comparison:")
print("  missionabort multi --preset multi-ec41 --out out/")
