"""Config-driven experiment pipelines behind the command-line entry points.

A configuration is a plain JSON object (see `presets` for complete examples).
Unknown keys are rejected so that typos fail loudly. Every pipeline is
deterministic given (config, seed): all randomness is derived from the seed
through keyed substreams.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from pathlib import Path

import numpy as np

from ._rng import substream
from .beliefs import (
    ObservationModel,
    bayes_update,
    from_spherical,
    to_spherical,
)
from .benchmarks import build_m_policy, tune_c_policy, tune_r_policy
from .distributions import (
    Distribution,
    distribution_from_json,
    erlang_mixture_approx,
    moment_match_rate,
    sup_norm_error,
)
from .simulation import TruthSpec, absorption_reference_sample, ks_distance, rollout
from .solvers import (
    PbviConfig,
    angle_sequence,
    compute_thresholds,
    exact_backward_ctmc,
    exact_backward_dimred,
    pbvi,
    policy_to_json,
)
from .surrogate import (
    SurrogateModel,
    absorption_sample,
    build_surrogate,
    build_surrogate_deterministic,
    check_hazard_monotone,
    defective_block_monotone,
    is_tp2,
)
from .values import CostModel

__all__ = [
    "ConfigError",
    "load_config",
    "build_truth",
    "build_cost",
    "build_model",
    "build_one_phase",
    "run_approx",
    "run_solve",
    "run_bench",
    "run_multi",
    "run_validate",
    "write_csv",
]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


_TOP_KEYS = {"truth", "surrogate", "cost", "solver", "bench", "approx", "reps", "seed"}
_TRUTH_KEYS = {"g", "f", "zeta", "obs", "delta", "n_periods", "rescue"}
_SURROGATE_KEYS = {"variant", "m1", "m2", "lambda", "nu", "q", "pi0"}
_COST_KEYS = {"cs", "cm", "cr", "task_lengths"}
_SOLVER_KEYS = {"kind", "granularity", "pbvi"}
_PBVI_KEYS = {"l1", "z1", "z2", "n_samples", "eps", "max_beliefs", "hull_cap", "hull_tol"}
_BENCH_KEYS = {"tune_reps", "c_grid", "p_grid"}
_APPROX_KEYS = {"m2_sweep", "horizon"}
_RESCUE_KEYS = {"kind", "cap", "w"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def load_config(path_or_obj) -> dict:
    """Load and validate a configuration from a path or an in-memory dict."""
    if isinstance(path_or_obj, (str, Path)):
        try:
            cfg = json.loads(Path(path_or_obj).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        cfg = dict(path_or_obj)
    _check_keys(cfg, _TOP_KEYS, "config")
    for section, keys in (
        ("truth", _TRUTH_KEYS),
        ("surrogate", _SURROGATE_KEYS),
        ("cost", _COST_KEYS),
        ("solver", _SOLVER_KEYS),
        ("bench", _BENCH_KEYS),
        ("approx", _APPROX_KEYS),
    ):
        if section in cfg:
            if not isinstance(cfg[section], dict):
                raise ConfigError(f"section {section!r} must be an object")
            _check_keys(cfg[section], keys, section)
    if "truth" not in cfg:
        raise ConfigError("config needs a 'truth' section")
    if "rescue" in cfg["truth"]:
        _check_keys(cfg["truth"]["rescue"], _RESCUE_KEYS, "truth.rescue")
    if "solver" in cfg and "pbvi" in cfg["solver"]:
        _check_keys(cfg["solver"]["pbvi"], _PBVI_KEYS, "solver.pbvi")
    return cfg


def _rescue_schedule(spec: dict, n_periods: int) -> np.ndarray:
    kind = spec.get("kind", "ramp")
    if kind == "ramp":
        return np.minimum(np.arange(n_periods + 1, dtype=float), float(spec.get("cap", 25.0)))
    if kind == "zero":
        return np.zeros(n_periods + 1)
    if kind == "three-site":
        from .presets import three_site_rescue

        return np.array([three_site_rescue(n) for n in range(n_periods + 1)])
    if kind == "values":
        w = np.asarray(spec["w"], dtype=float)
        if w.shape != (n_periods + 1,):
            raise ConfigError(f"rescue schedule must have length {n_periods + 1}")
        return w
    raise ConfigError(f"unknown rescue kind {kind!r}")


def build_truth(cfg: dict) -> TruthSpec:
    t = cfg["truth"]
    try:
        return TruthSpec(
            g=distribution_from_json(t["g"]),
            f=distribution_from_json(t["f"]),
            zeta=float(t["zeta"]),
            obs=ObservationModel(np.asarray(t["obs"], dtype=float)),
            delta=float(t["delta"]),
            n_periods=int(t["n_periods"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad truth section: {exc}") from exc


def build_cost(cfg: dict) -> CostModel:
    t = cfg["truth"]
    c = cfg.get("cost", {})
    n_periods = int(t["n_periods"])
    w = _rescue_schedule(t.get("rescue", {"kind": "ramp"}), n_periods)
    cm = c.get("cm", 2000.0)
    task_lengths = c.get("task_lengths")
    try:
        return CostModel(
            cs=float(c.get("cs", 2000.0)),
            cm=tuple(float(x) for x in cm) if isinstance(cm, (list, tuple)) else float(cm),
            delta=float(t["delta"]),
            n_periods=n_periods,
            w=w,
            cr=float(c.get("cr", 0.0)),
            task_lengths=tuple(int(x) for x in task_lengths) if task_lengths else None,
        )
    except ValueError as exc:
        raise ConfigError(f"bad cost section: {exc}") from exc


def build_model(cfg: dict, truth: TruthSpec) -> tuple[SurrogateModel, dict]:
    """Surrogate model per the config, with the fitted-rate report."""
    s = cfg.get("surrogate", {})
    variant = s.get("variant", "deterministic-start")
    m2 = int(s.get("m2", 20))
    lam_spec = s.get("lambda", "moment-match")
    info: dict = {"variant": variant, "m2": m2}
    try:
        if variant == "explicit":
            model = SurrogateModel(
                q=np.asarray(s["q"], dtype=float),
                pi0=np.asarray(s["pi0"], dtype=float),
                m1=int(s["m1"]),
                m2=m2,
                lam=float(lam_spec),
                zeta=truth.zeta,
                variant="explicit",
            )
            info["lambda"] = model.lam
            return model, info
        lam = moment_match_rate(truth.f, m2) if lam_spec == "moment-match" else float(lam_spec)
        info["lambda"] = lam
        if variant == "deterministic-start":
            m1 = int(s["m1"])
            nu = float(s["nu"])
            info.update(m1=m1, nu=nu)
            return build_surrogate_deterministic(nu, m1, truth.f, truth.zeta, m2, lam), info
        if variant == "erlang-mixture-start":
            m1 = int(s["m1"])
            info.update(m1=m1)
            return build_surrogate(truth.g, truth.f, truth.zeta, m1, m2, lam), info
    except (KeyError, ValueError, ArithmeticError) as exc:
        raise ConfigError(f"bad surrogate section: {exc}") from exc
    raise ConfigError(f"unknown surrogate variant {variant!r}")


def build_one_phase(cfg: dict, truth: TruthSpec) -> SurrogateModel:
    """Single-defective-phase surrogate: same healthy side, exponential defect."""
    s = cfg.get("surrogate", {})
    lam1 = moment_match_rate(truth.f, 1)
    variant = s.get("variant", "deterministic-start")
    if variant == "deterministic-start":
        return build_surrogate_deterministic(float(s["nu"]), int(s["m1"]), truth.f, truth.zeta, 1, lam1)
    if variant == "erlang-mixture-start":
        return build_surrogate(truth.g, truth.f, truth.zeta, int(s["m1"]), 1, max(lam1, truth.zeta * 1.01))
    # Explicit models keep their healthy block and collapse the defective one.
    m1 = int(s["m1"])
    q_full = np.asarray(s["q"], dtype=float)
    q = np.zeros((m1 + 2, m1 + 2))
    q[:m1, : m1 + 1] = q_full[:m1, : m1 + 1]
    q[:m1, -1] = q_full[:m1, -1]
    for i in range(m1):
        q[i, i] = 0.0
        q[i, i] = -q[i].sum()
    q[m1, m1 + 1] = lam1
    q[m1, m1] = -lam1
    pi0 = np.zeros(m1 + 1)
    pi0[: m1] = np.asarray(s["pi0"], dtype=float)[:m1]
    pi0 = pi0 / pi0.sum()
    return SurrogateModel(q=q, pi0=pi0, m1=m1, m2=1, lam=lam1, zeta=truth.zeta, variant="explicit")


def _pbvi_config(cfg: dict, seed: int) -> PbviConfig:
    p = dict(cfg.get("solver", {}).get("pbvi", {}))
    p.setdefault("l1", 64)
    p.setdefault("z1", 30)
    p.setdefault("z2", 10)
    p.setdefault("n_samples", 512)
    p.setdefault("eps", 1e-3)
    p.setdefault("max_beliefs", 2048)
    return PbviConfig(seed=seed, **p)


def run_solve(cfg: dict, seed: int | None = None):
    """Build the surrogate, run certificates, and dispatch to the right solver.

    Returns (policy, report): the report carries the certificates, the fitted
    rate, and the thresholds.
    """
    truth = build_truth(cfg)
    cost = build_cost(cfg)
    model, info = build_model(cfg, truth)
    seed = int(cfg.get("seed", 0)) if seed is None else seed

    certificates = {
        "hazard_monotone": check_hazard_monotone(model) is None,
        "hazard_block_monotone": defective_block_monotone(model),
        "obs_tp2": is_tp2(truth.obs.d),
        "step_tp2": is_tp2(model.kernel(cost.delta).ptilde, tol=1e-12),
    }
    if not certificates["hazard_block_monotone"]:
        warnings.warn(
            "defective-phase failure rates are not monotone; control-limit "
            "structure certificates will be skipped",
            stacklevel=2,
        )

    kind = cfg.get("solver", {}).get("kind", "auto")
    granularity = float(cfg.get("solver", {}).get("granularity", 0.01))
    if kind == "auto":
        if model.n_transient == 2:
            kind = "exact-ctmc"
        elif model.m2 == 1:
            kind = "exact-dimred"
        else:
            kind = "pbvi-modified"

    thresholds = compute_thresholds(model, cost)
    if kind == "exact-ctmc":
        policy = exact_backward_ctmc(model, cost, truth.obs, granularity)
    elif kind == "exact-dimred":
        policy = exact_backward_dimred(model, cost, truth.obs, granularity)
    elif kind in ("pbvi-modified", "pbvi-classical"):
        variant = kind.removeprefix("pbvi-")
        policy = pbvi(model, cost, truth.obs, _pbvi_config(cfg, seed), variant=variant, thresholds=thresholds)
    else:
        raise ConfigError(f"unknown solver kind {kind!r}")

    report = {
        "solver": kind,
        "surrogate": info,
        "certificates": certificates,
        "thresholds": thresholds.to_json(),
    }
    return policy, report


def run_approx(cfg: dict):
    """Phase-count sweep of the defect-distribution approximation.

    Returns (sweep_rows, curve_rows): the fitted rate and sup-norm error per
    phase count, and the CDF comparison curve at the configured phase count.
    """
    truth = build_truth(cfg)
    approx_cfg = cfg.get("approx", {})
    sweep = [int(m) for m in approx_cfg.get("m2_sweep", [5, 10, 20])]
    horizon = float(approx_cfg.get("horizon", truth.horizon + 25.0))
    rows = []
    for m2 in sweep:
        lam = moment_match_rate(truth.f, m2)
        err = sup_norm_error(truth.f, erlang_mixture_approx(truth.f, m2, lam), horizon)
        rows.append({"m2": m2, "lambda": round(lam, 6), "sup_norm_error": round(err, 6)})

    m2_sel = int(cfg.get("surrogate", {}).get("m2", sweep[-1]))
    lam_sel = moment_match_rate(truth.f, m2_sel)
    approx = erlang_mixture_approx(truth.f, m2_sel, lam_sel)
    grid = np.linspace(0.0, horizon, 371)
    curve = [
        {"t": round(float(t), 4), "cdf_true": round(float(truth.f.cdf(t)), 8),
         "cdf_approx": round(float(approx.cdf(t)), 8)}
        for t in grid
    ]
    return rows, curve


def _benchmark_suite(cfg, truth, cost, model, seed):
    """Tune the two rule benchmarks and solve the two model benchmarks."""
    bench_cfg = cfg.get("bench", {})
    tune_reps = int(bench_cfg.get("tune_reps", 4000))
    granularity = float(cfg.get("solver", {}).get("granularity", 0.01))
    c_grid = bench_cfg.get("c_grid")
    if c_grid is not None:
        c_grid = [tuple(int(v) for v in pair) for pair in c_grid]
    p_grid = bench_cfg.get("p_grid")
    if p_grid is not None:
        p_grid = np.asarray(p_grid, dtype=float)

    c_bench = tune_c_policy(truth, cost, tune_reps, substream_seed(seed, 1), grid=c_grid)
    r_bench = tune_r_policy(truth, cost, model, truth.obs, tune_reps, substream_seed(seed, 2), grid=p_grid)
    m_bench = build_m_policy(truth.g, truth.f, truth.zeta, cost, truth.obs, granularity)

    one_model = build_one_phase(cfg, truth)
    if one_model.n_transient == 2:
        one_policy = exact_backward_ctmc(one_model, cost, truth.obs, granularity)
    else:
        one_policy = exact_backward_dimred(one_model, cost, truth.obs, granularity)
    return {
        "c-policy": c_bench,
        "r-policy": r_bench,
        "m-policy": m_bench,
        "one-phase": one_policy,
    }


def substream_seed(seed: int, *key: int) -> int:
    """Stable derived integer seed for a named sub-experiment."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


def run_bench(cfg: dict):
    """Solve and tune all five policies and evaluate them on common draws.

    Returns (rows, details): one summary row per policy, plus the solver
    report and tuned parameters.
    """
    truth = build_truth(cfg)
    cost = build_cost(cfg)
    model, info = build_model(cfg, truth)
    seed = int(cfg.get("seed", 0))
    reps = int(cfg.get("reps", 10_000))

    proposed, report = run_solve(cfg, seed=substream_seed(seed, 0))
    suite = _benchmark_suite(cfg, truth, cost, model, seed)
    policies = {"proposed": proposed, **suite}
    summaries = rollout(policies, truth, cost, reps, substream_seed(seed, 9))

    order = ["c-policy", "r-policy", "m-policy", "one-phase", "proposed"]
    rows = [summaries[name].to_row() for name in order]
    details = {
        "report": report,
        "policy": proposed,
        "tuned": {
            "c-policy": suite["c-policy"].params,
            "r-policy": suite["r-policy"].params,
            "m-policy": suite["m-policy"].params,
        },
        "tuning_tables": {
            "c-policy": suite["c-policy"].tuning,
            "r-policy": suite["r-policy"].tuning,
        },
        "summaries": summaries,
    }
    return rows, details


def run_multi(cfg: dict):
    """Multi-task comparison (same pipeline; the cost model carries the tasks)."""
    cost = build_cost(cfg)
    if not cost.multi_task:
        raise ConfigError("run_multi needs cost.task_lengths")
    rows, details = run_bench(cfg)
    from .values import multi_no_abort, multi_no_abort_after

    truth = build_truth(cfg)
    model, _ = build_model(cfg, truth)
    lam = model.lam
    details["certificate_multi"] = {
        "no_abort": multi_no_abort(cost, lam),
        "no_abort_after": [
            multi_no_abort_after(l, model, cost, lam) for l in range(len(cost.cm))
        ],
    }
    return rows, details


def _check(name: str, status: str, detail: str = "") -> dict:
    return {"check": name, "status": status, "detail": detail}


def run_validate(cfg: dict, ks_samples: int = 100_000):
    """Run every structural property suite on the configured instance.

    Returns a list of {check, status, detail} rows with status pass/fail/skip;
    checks depending on the monotone-hazard or TP2 certificates are skipped
    (with the reason) when the certificate does not hold. The solved-policy
    structure checks use a reduced solver budget: they probe structural
    invariants (concavity, monotonicity, convex abort region), which hold for
    any point-based solve, not only a converged one.
    """
    cfg = json.loads(json.dumps(cfg))
    solver = cfg.setdefault("solver", {})
    p = dict(solver.get("pbvi", {}))
    p["l1"] = min(int(p.get("l1", 64)), 256)
    p["z1"] = min(int(p.get("z1", 30)), 6)
    p["z2"] = min(int(p.get("z2", 10)), 3)
    p["max_beliefs"] = min(int(p.get("max_beliefs", 2048)), 1024)
    solver["pbvi"] = p

    truth = build_truth(cfg)
    cost = build_cost(cfg)
    model, _ = build_model(cfg, truth)
    seed = int(cfg.get("seed", 0))
    rng = substream(seed, 7)
    m = model.n_transient
    checks: list[dict] = []

    # Generator invariants.
    q = model.q
    ok = (
        float(np.abs(q.sum(axis=1)).max()) < 1e-10
        and float((q - np.diag(np.diag(q))).min()) >= 0.0
        and not q[-1].any()
    )
    checks.append(_check("generator-invariants", "pass" if ok else "fail"))

    # Kernel semigroup.
    gap = float(np.abs(model.kernel(1.0).p @ model.kernel(2.0).p - model.kernel(3.0).p).max())
    checks.append(_check("kernel-semigroup", "pass" if gap <= 1e-8 else "fail", f"max gap {gap:.2e}"))

    # TP2 certificates.
    obs_tp2 = is_tp2(truth.obs.d)
    checks.append(_check("observation-tp2", "pass" if obs_tp2 else "fail"))
    step_tp2 = all(is_tp2(model.kernel(t).ptilde, tol=1e-12) for t in (0.5, 1.0, 5.0, 25.0))
    checks.append(_check("step-kernel-tp2", "pass" if step_tp2 else "fail"))

    # Hazard certificates and the failure-column ordering.
    full_cert = check_hazard_monotone(model) is None
    block_cert = defective_block_monotone(model)
    checks.append(
        _check(
            "hazard-monotone",
            "pass" if block_cert else "fail",
            "full certificate" if full_cert else ("defective block only" if block_cert else ""),
        )
    )
    if block_cert:
        lo = 0 if full_cert else model.m1
        ok = all(
            bool(np.all(np.diff(model.kernel(t).p_fail[lo:]) >= -1e-12)) for t in (0.5, 1.0, 5.0, 25.0)
        )
        checks.append(_check("failure-column-monotone", "pass" if ok else "fail"))
    else:
        checks.append(_check("failure-column-monotone", "skip", "hazard certificate failed"))

    # Absorption-time distribution against the direct construction.
    if model.variant in ("deterministic-start", "erlang-mixture-start"):
        chain = absorption_sample(model, substream(seed, 8), size=ks_samples)
        direct = np.sort(absorption_reference_sample(model, substream(seed, 9), size=ks_samples))

        def empirical_cdf(x):
            return np.searchsorted(direct, x, side="right") / len(direct)

        stat = ks_distance(chain, empirical_cdf)
        checks.append(
            _check("absorption-distribution-ks", "pass" if stat < 0.01 else "fail", f"ks {stat:.4f}")
        )
    else:
        checks.append(_check("absorption-distribution-ks", "skip", "explicit generator"))

    # Belief filtering keeps the simplex; spherical transform round-trips.
    ptilde = model.kernel(cost.delta).ptilde
    ok = True
    for _ in range(1000):
        pi = rng.dirichlet(np.ones(m))
        k = int(rng.integers(1, truth.obs.n_signals + 1))
        post = bayes_update(pi, k, ptilde, truth.obs, model.m1, model.m2)
        if post.min() < -1e-12 or abs(post.sum() - 1.0) > 1e-10:
            ok = False
            break
    checks.append(_check("bayes-simplex-preservation", "pass" if ok else "fail"))

    worst = np.max(
        [
            float(np.max(np.abs(from_spherical(*to_spherical(p)) - p)))
            for p in rng.dirichlet(np.ones(m), size=10_000)
        ]
    )
    checks.append(
        _check("spherical-roundtrip", "pass" if worst <= 1e-10 else "fail", f"max {worst:.2e}")
    )

    # Solved-policy structure.
    policy, _ = run_solve(cfg, seed=substream_seed(seed, 0))
    thresholds = policy.thresholds
    if thresholds.never_abort:
        checks.append(_check("threshold-order", "skip", "never-abort instance"))
    elif thresholds.tilde_n is None:
        checks.append(_check("threshold-order", "pass", "no abort at the worst vertex"))
    else:
        ok = 0 <= thresholds.tilde_n < max(thresholds.hat_n, 1)
        checks.append(
            _check(
                "threshold-order",
                "pass" if ok else "fail",
                f"tilde {thresholds.tilde_n} hat {thresholds.hat_n}",
            )
        )

    if not cost.multi_task:
        from .values import upper_continue_vector, abort_cost_vector

        ok = True
        for _ in range(200):
            n = int(rng.integers(thresholds.hat_n, cost.n_periods + 1))
            pi = rng.dirichlet(np.ones(m))
            gap = float(pi @ (upper_continue_vector(model, cost, n) - abort_cost_vector(model, cost, n)))
            if gap > 1e-9:
                ok = False
                break
        checks.append(_check("continue-after-hat-n", "pass" if ok else "fail"))

    if policy.kind == "alpha-set":
        ok = True
        for _ in range(1000):
            n = int(rng.integers(0, cost.n_periods))
            p1, p2 = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
            a = float(rng.uniform())
            if policy.value(n, a * p1 + (1 - a) * p2) < (
                a * policy.value(n, p1) + (1 - a) * policy.value(n, p2) - 1e-9
            ):
                ok = False
                break
        checks.append(_check("value-concavity", "pass" if ok else "fail"))

        if block_cert and obs_tp2:
            ok = True
            for _ in range(1000):
                lo = rng.dirichlet(np.ones(m)) + 1e-9
                lo = lo / lo.sum()
                hi = lo * np.cumprod(rng.uniform(1.0, 1.5, size=m))
                hi = hi / hi.sum()
                n = int(rng.integers(1, cost.n_periods))
                if policy.value(n, lo) > policy.value(n, hi) + 1e-6:
                    ok = False
                    break
            checks.append(_check("value-mlr-monotone", "pass" if ok else "fail"))
        else:
            checks.append(_check("value-mlr-monotone", "skip", "certificates failed"))

        ok = True
        probes = 0
        for n in (1, max(thresholds.hat_n // 2, 1), max(thresholds.hat_n - 2, 1)):
            pts = rng.dirichlet(np.ones(m), size=300)
            mask = policy.abort_batch(n, pts)
            aborting = pts[mask]
            if len(aborting) < 2:
                continue
            for _ in range(334):
                i, j = rng.integers(0, len(aborting), size=2)
                t = float(rng.uniform())
                mid = t * aborting[i] + (1 - t) * aborting[j]
                probes += 1
                if not bool(policy.abort_batch(n, mid[None, :])[0]):
                    ok = False
                    break
        checks.append(
            _check("abort-region-convex", "pass" if ok else "fail", f"{probes} midpoint probes")
        )

    # Dimension-reduced angle sequence against the full filter.
    one_model = build_one_phase(cfg, truth)
    angles = angle_sequence(one_model, cost)
    pt = one_model.kernel(cost.delta).ptilde
    pi = one_model.pi0.copy()
    worst = 0.0
    for n in range(1, min(cost.n_periods, 60)):
        k = int(rng.integers(1, truth.obs.n_signals + 1))
        pi = bayes_update(pi, k, pt, truth.obs, one_model.m1, one_model.m2)
        _, phi = to_spherical(pi)
        worst = max(worst, float(np.max(np.abs(phi - angles[n]))))
    checks.append(
        _check("angle-sequence-agreement", "pass" if worst <= 1e-8 else "fail", f"max {worst:.2e}")
    )

    return checks


def write_csv(path: Path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
