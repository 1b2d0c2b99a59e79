"""Programmatic acceptance suite: one named check per criterion.

Each check runs at its pinned desk scale and tolerance and returns a
CheckResult; the CLI ``check`` subcommand and the acceptance test module
both drive this registry.  Scales and targets accept string overrides
(e.g. {"dim.target-h0.5": "0.9"}) so a deliberately broken tolerance can
be demonstrated and so tests can shrink scales.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import ks_2samp

from .burgers import clusters_match, solve, sticky_shock_clusters
from .envelopes import all_slope_pairs_batch
from .experiments import (
    RunConfig,
    config_to_dict,
    rerun_from_manifest,
    run_experiment,
    _dim_cell,
)
from .fbm import fbm_covariance, integrate_values, sample_fbm_exact, \
    sample_fbm_fast, sample_fbm_fast_batch
from .grids import RandomnessSpec, SampleGrid
from .persistence import (
    BROWNIAN_MAX_MEAN,
    BarrierEvent,
    estimate_persistence,
    exponent_fit,
    verify_chain,
)
from .rkhs import (
    build_space,
    combined_trend,
    covariance_column_trend,
    psi_trend,
    rkhs_norm,
    TrendFunction,
    verify_shift_inequality,
)

H_TRIPLE = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    runtime_s: float
    details: dict


class _Overrides:
    def __init__(self, values: dict | None):
        self.values = dict(values or {})

    def get(self, key: str, default):
        raw = self.values.get(key)
        if raw is None:
            return default
        if isinstance(default, bool):
            return str(raw).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw


def _ks_critical(n1: int, n2: int, alpha: float = 0.01) -> float:
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((n1 + n2) / (n1 * n2))


# --- criterion 1 -----------------------------------------------------------

def check_sampler_covariance(ov: _Overrides) -> dict:
    replicas = ov.get("sampler-cov.replicas", 10_000)
    grid = SampleGrid.anchored(0.5, 3, 4)  # 8 points including the anchor
    coords = grid.coordinates
    worst = 0.0
    for h in H_TRIPLE:
        vals = np.stack([
            sample_fbm_exact(h, grid, RandomnessSpec(101, r)).values
            for r in range(replicas)])
        target = fbm_covariance(h, coords[:, None], coords[None, :])
        emp = vals.T @ vals / replicas
        se = np.sqrt((np.outer(np.diag(target), np.diag(target))
                      + target ** 2) / replicas)
        mask = se > 0
        dev = np.abs(emp - target)
        worst = max(worst, float((dev[mask] / (4 * se[mask])).max()))
        if np.any(dev[~mask] != 0):
            worst = math.inf
    return {"pass": worst <= 1.0, "worst_dev_over_4se": worst,
            "replicas": replicas}


# --- criterion 2 -----------------------------------------------------------

def check_sampler_equivalence(ov: _Overrides) -> dict:
    replicas = ov.get("sampler-eq.replicas", 10_000)
    n = ov.get("sampler-eq.points", 64)
    grid = SampleGrid.one_sided(1.0, n)
    crit = _ks_critical(replicas, replicas)
    stats = {}
    for h in H_TRIPLE:
        mx_exact = np.array([
            sample_fbm_exact(h, grid, RandomnessSpec(201, r)).values.max()
            for r in range(replicas)])
        mx_fast = sample_fbm_fast_batch(h, grid, 202, range(replicas)).max(axis=1)
        stats[f"h={h:g}"] = float(ks_2samp(mx_exact, mx_fast).statistic)
    return {"pass": all(s < crit for s in stats.values()),
            "ks": stats, "critical_1pct": crit}


# --- criterion 3 -----------------------------------------------------------

def check_telescoping(ov: _Overrides) -> dict:
    sequences = ov.get("telescoping.sequences", 1000)
    length = ov.get("telescoping.length", 256)
    grid = SampleGrid.one_sided(1.0, length - 1)
    worst = 0.0
    for h in H_TRIPLE:
        w = sample_fbm_fast_batch(h, grid, 301, range(sequences))
        ii = integrate_values(w, 1.0, 0)
        gm, gp = all_slope_pairs_batch(ii)
        f = np.clip(gm[:, 1:-1] - gp[:, 1:-1], 0.0, None).sum(axis=1)
        endpoint = gp[:, 0] - gm[:, -1]
        rel = np.abs(f - endpoint) / np.maximum.reduce(
            [np.abs(f), np.abs(endpoint), np.full_like(f, 1e-30)])
        worst = max(worst, float(rel.max()))
    return {"pass": worst <= 1e-9, "worst_rel_err": worst}


# --- criterion 4 -----------------------------------------------------------

def check_expectation_identity(ov: _Overrides) -> dict:
    replicas = ov.get("identity.replicas", 10_000)
    n = ov.get("identity.n", 64)
    grid = SampleGrid.one_sided(1.0, n)
    sums, sumsq = [], []
    for lo in range(0, replicas, 1024):
        reps = range(lo, min(lo + 1024, replicas))
        w = sample_fbm_fast_batch(0.5, grid, 401, reps)
        ii = integrate_values(w, 1.0, 0)
        gm, gp = all_slope_pairs_batch(ii)
        f = np.clip(gm[:, 1:-1] - gp[:, 1:-1], 0.0, None).sum(axis=1)
        d = f - 2.0 * gp[:, 0]
        sums.append(float(d.sum()))
        sumsq.append(float(np.square(d).sum()))
    mean = math.fsum(sums) / replicas
    var = max(math.fsum(sumsq) / replicas - mean ** 2, 0.0)
    se = math.sqrt(var / replicas)
    return {"pass": abs(mean) <= 4 * se, "mean_gap": mean, "se": se,
            "gap_sigma": abs(mean) / se if se > 0 else 0.0}


# --- criterion 5 -----------------------------------------------------------

def check_inequality_chain(ov: _Overrides) -> dict:
    replicas = ov.get("chain.replicas", 10_000)
    n = ov.get("chain.n", 64)
    per_h = {}
    ok = True
    m1_gap = None
    for h in H_TRIPLE:
        report = verify_chain(h, n, replicas, 501)
        per_h[f"h={h:g}"] = {name: rel["pass"]
                             for name, rel in report.relations.items()}
        ok = ok and report.passed
        if h == 0.5:
            m1 = report.m1
            lo = BROWNIAN_MAX_MEAN - 0.03 - 4 * m1.std_error
            hi = BROWNIAN_MAX_MEAN + 4 * m1.std_error
            m1_gap = {"estimate": m1.value, "oracle": BROWNIAN_MAX_MEAN,
                      "band": [lo, hi], "pass": bool(lo <= m1.value <= hi)}
            ok = ok and m1_gap["pass"]
    return {"pass": ok, "relations": per_h, "m1_cross_check": m1_gap}


# --- criterion 6 -----------------------------------------------------------

def check_burgers_oracle(ov: _Overrides) -> dict:
    paths = ov.get("burgers.paths", 20)
    particles = ov.get("burgers.particles", 128)
    failures = []
    for h in H_TRIPLE:
        grid = SampleGrid.anchored(2.0 / particles, particles // 2,
                                   particles // 2)
        for rep in range(paths):
            u0 = sample_fbm_fast(h, grid, RandomnessSpec(601, rep))
            sol = solve(u0, t=1.0)
            sticky = sticky_shock_clusters(u0, t=1.0)
            if not clusters_match(sol.shock_clusters, sticky, tol_cells=1):
                failures.append({"h": h, "replica": rep})
    return {"pass": not failures, "paths_per_h": paths,
            "failures": failures}


# --- criterion 7 -----------------------------------------------------------

def check_dimension(ov: _Overrides) -> dict:
    replicas = ov.get("dim.replicas", 50)
    log2n = ov.get("dim.grid-log2", 16)
    tol = ov.get("dim.slope-tol", 0.1)
    slopes = {}
    ok = True
    for h in H_TRIPLE:
        cfg = RunConfig(experiment="dim", hurst=(h,), replicas=replicas,
                        seed=701, options={"grid-log2": str(log2n)})
        _, summary = _dim_cell((h, config_to_dict(cfg)))
        target = ov.get(f"dim.target-h{h:g}", h)
        good = abs(summary["slope"] - target) <= tol
        slopes[f"h={h:g}"] = {"slope": summary["slope"],
                              "se": summary["slope_se"], "target": target,
                              "pass": bool(good)}
        ok = ok and good
    return {"pass": ok, "slopes": slopes, "tol": tol}


# --- criteria 8, 9, 10 -----------------------------------------------------

def check_max_exponent(ov: _Overrides) -> dict:
    replicas = ov.get("max-exp.replicas", 20_000)
    level = ov.get("max-exp.level", 0.5)
    tol = ov.get("max-exp.tol", 0.07)
    ladder = (64.0, 128.0, 256.0, 512.0, 1024.0)
    out = {}
    ok = True
    for h in H_TRIPLE:
        ests = [estimate_persistence(BarrierEvent("fbm_max", level, t), h,
                                     1.0, replicas, 801) for t in ladder]
        fit = exponent_fit(ests)
        good = abs(fit.slope - (1.0 - h)) <= tol
        out[f"h={h:g}"] = {"slope": fit.slope, "se": fit.slope_se,
                           "target": 1.0 - h, "pass": bool(good),
                           "excluded": list(fit.excluded)}
        ok = ok and good
    return {"pass": ok, "fits": out, "level": level, "tol": tol}


def check_integral_exponent(ov: _Overrides) -> dict:
    replicas = ov.get("int-exp.replicas", 10_000)
    tol = ov.get("int-exp.tol", 0.08)
    ests = [estimate_persistence(BarrierEvent("ifbm_one_sided", 1.0, t), 0.5,
                                 1.0, replicas, 901)
            for t in (64.0, 128.0, 256.0, 512.0)]
    fit = exponent_fit(ests)
    return {"pass": abs(fit.slope - 0.25) <= tol, "slope": fit.slope,
            "se": fit.slope_se, "target": 0.25, "tol": tol}


def check_two_sided_bound(ov: _Overrides) -> dict:
    replicas = ov.get("two-sided.replicas", 10_000)
    slack = ov.get("two-sided.slack", 0.15)
    ladder = (32.0, 64.0, 128.0, 256.0, 512.0)
    out = {}
    ok = True
    for h in H_TRIPLE:
        ests = [estimate_persistence(BarrierEvent("ifbm_two_sided", 1.0, t),
                                     h, 1.0, replicas, 1001) for t in ladder]
        fit = exponent_fit(ests)
        floor = (1.0 - h) - slack
        good = fit.slope >= floor
        # full-domain event is included in the punctured one pathwise
        p_two = estimate_persistence(BarrierEvent("ifbm_two_sided", 1.0, 128.0),
                                     h, 1.0, replicas, 1002)
        p_punc = estimate_persistence(BarrierEvent("ifbm_punctured", 1.0, 128.0),
                                      h, 1.0, replicas, 1002)
        ordered = p_two.value <= p_punc.value
        out[f"h={h:g}"] = {"slope": fit.slope, "floor": floor,
                           "pass": bool(good), "p_full": p_two.value,
                           "p_punctured": p_punc.value,
                           "ordering": bool(ordered)}
        ok = ok and good and ordered
    return {"pass": ok, "fits": out}


# --- criterion 11 ----------------------------------------------------------

def check_rkhs(ov: _Overrides) -> dict:
    replicas = ov.get("rkhs.replicas", 1_000_000)
    grid33 = SampleGrid.anchored(0.125, 16, 16)
    grid17 = SampleGrid.anchored(0.25, 8, 8)
    details: dict = {}
    ok = True

    worst_repr = 0.0
    worst_comp = 0.0
    for h in H_TRIPLE:
        sp = build_space(grid33, h)
        for i in range(sp.grid.count):
            target = math.sqrt(sp.cov[i, i])
            if target == 0.0:
                continue
            err = abs(rkhs_norm(sp, sp.cov[:, i]) - target) / target
            worst_repr = max(worst_repr, err)
        x = grid33.coordinates
        outside = np.abs(x) >= 1.0
        for a in (0, 1):
            trend = combined_trend(sp, a)
            dev = np.abs(trend.values[outside]
                         - (2.0 * np.abs(x[outside]) + a)).max()
            worst_comp = max(worst_comp, float(dev))
    details["worst_reproducing_rel_err"] = worst_repr
    details["worst_composition_abs_err"] = worst_comp
    ok = ok and worst_repr <= 1e-8 and worst_comp <= 1e-5

    configs = [
        ("combined0_h0.5_lvl2", grid33, 0.5, lambda sp: combined_trend(sp, 0), 2.0),
        ("combined1_h0.5_lvl3", grid33, 0.5, lambda sp: combined_trend(sp, 1), 3.0),
        ("covcol0.1_h0.3_lvl1", grid17, 0.3,
         lambda sp: covariance_column_trend(sp, 1.0, 0.1), 1.0),
        ("covcol0.3_h0.7_lvl0.5", grid33, 0.7,
         lambda sp: covariance_column_trend(sp, -1.0, 0.3), 0.5),
        ("psi0.2_h0.5_lvl1", grid17, 0.5,
         lambda sp: TrendFunction(0.2 * psi_trend(grid17).values, "psi*0.2"),
         1.0),
    ]
    shift = {}
    for name, grid, h, mk, level in configs:
        sp = build_space(grid, h)
        rep = verify_shift_inequality(sp, mk(sp), level, replicas, 1101)
        shift[name] = {"pass": rep.passed, "inconclusive": rep.inconclusive,
                       "lhs": rep.lhs, "rhs": rep.rhs,
                       "slack_sigma": rep.slack_sigma}
        ok = ok and rep.passed and not rep.inconclusive
    details["shift_configs"] = shift
    details["pass"] = ok
    return details


# --- criterion 12 ----------------------------------------------------------

_TINY_CONFIGS = [
    RunConfig("sample", hurst=(0.5,), replicas=2, seed=1,
              options={"points": "32"}),
    RunConfig("solve", hurst=(0.4,), replicas=2, seed=2,
              options={"half-points": "64"}),
    RunConfig("dim", hurst=(0.5,), replicas=2, seed=3,
              options={"grid-log2": "12"}),
    RunConfig("persist", hurst=(0.5,), horizons=(8.0, 16.0, 32.0, 64.0),
              replicas=200, seed=4),
    RunConfig("chain", hurst=(0.5,), replicas=200, seed=5,
              options={"n": "8"}),
    RunConfig("rkhs-verify", hurst=(0.5,), replicas=2000, seed=6,
              options={"half-points": "8", "trend": "covcol@1*0.1",
                       "level": "1"}),
]


def check_determinism(ov: _Overrides) -> dict:
    import dataclasses
    mismatches = []
    with tempfile.TemporaryDirectory() as tmp:
        for cfg in _TINY_CONFIGS:
            dir_a = Path(tmp) / f"{cfg.experiment}-a"
            dir_b = Path(tmp) / f"{cfg.experiment}-b"
            status, _ = run_experiment(dataclasses.replace(cfg, out=str(dir_a)))
            if status not in (0, 2):
                mismatches.append({"experiment": cfg.experiment,
                                   "error": f"first run exited {status}"})
                continue
            rerun_from_manifest(dir_a / "manifest.json", out=str(dir_b))
            for file in sorted(p.name for p in dir_a.iterdir()):
                if file == "manifest.json":
                    continue  # carries wall time, not results
                if not filecmp.cmp(dir_a / file, dir_b / file, shallow=False):
                    mismatches.append({"experiment": cfg.experiment,
                                       "file": file})
    return {"pass": not mismatches, "mismatches": mismatches,
            "experiments": [c.experiment for c in _TINY_CONFIGS]}


# ---------------------------------------------------------------------------

CHECKS = {
    "sampler-covariance": check_sampler_covariance,
    "sampler-equivalence": check_sampler_equivalence,
    "telescoping": check_telescoping,
    "expectation-identity": check_expectation_identity,
    "inequality-chain": check_inequality_chain,
    "burgers-oracle": check_burgers_oracle,
    "dimension": check_dimension,
    "max-exponent": check_max_exponent,
    "integral-exponent": check_integral_exponent,
    "two-sided-bound": check_two_sided_bound,
    "rkhs": check_rkhs,
    "determinism": check_determinism,
}


def run_checks(names=None, overrides=None) -> list[CheckResult]:
    ov = _Overrides(overrides)
    selected = list(CHECKS) if not names else list(names)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check names {unknown}; "
                         f"available: {sorted(CHECKS)}")
    results = []
    for name in selected:
        started = time.time()
        details = CHECKS[name](ov)
        results.append(CheckResult(name=name, passed=bool(details.pop("pass")),
                                   runtime_s=time.time() - started,
                                   details=details))
    return results
