"""Reproducible batch experiments behind the command-line front door.

Every experiment consumes a RunConfig, writes machine-readable artifacts
(JSON-lines records, CSV tables, JSON summaries) plus a manifest, and is
bit-reproducible from that manifest: outputs depend only on the config.
Worker parallelism over experiment cells is capped by BURGERSLAB_WORKERS
and cannot change results (cells are deterministic and written in a fixed
order).
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .burgers import solve
from .fbm import sample_fbm_exact, sample_fbm_fast
from .fractal import dimension_estimate
from .grids import RandomnessSpec, SampleGrid
from .persistence import (
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
    TrendFunction,
    verify_shift_inequality,
)

EXPERIMENTS = ("sample", "solve", "dim", "persist", "chain", "rkhs-verify")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    hurst: tuple[float, ...] = (0.5,)
    horizons: tuple[float, ...] = ()
    spacing: float = 1.0
    replicas: int = 100
    seed: int = 0
    out: str = "run-out"
    check: bool = False
    options: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, "
                              f"got {self.experiment!r}")
        for h in self.hurst:
            if not 0.0 < h < 1.0:
                raise ConfigError(f"hurst values must lie in (0, 1), got {h}")
        if not self.hurst:
            raise ConfigError("hurst list must not be empty")
        if self.spacing <= 0:
            raise ConfigError(f"spacing must be > 0, got {self.spacing}")
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if any(t <= 0 for t in self.horizons):
            raise ConfigError(f"horizons must be > 0, got {self.horizons}")
        if self.experiment == "persist" and len(self.horizons) < 1:
            raise ConfigError("persist needs at least one horizon")
        return self

    def opt(self, key: str, default):
        """Typed option lookup; option values arrive as strings."""
        raw = self.options.get(key)
        if raw is None:
            return default
        try:
            if isinstance(default, bool):
                return str(raw).lower() in ("1", "true", "yes")
            if isinstance(default, int):
                return int(raw)
            if isinstance(default, float):
                return float(raw)
        except ValueError:
            raise ConfigError(f"option {key} must parse as "
                              f"{type(default).__name__}, got {raw!r}")
        return str(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    doc = asdict(cfg)
    doc["hurst"] = list(cfg.hurst)
    doc["horizons"] = list(cfg.horizons)
    return doc


def config_from_dict(doc: dict) -> RunConfig:
    return RunConfig(experiment=doc["experiment"],
                     hurst=tuple(doc.get("hurst", (0.5,))),
                     horizons=tuple(doc.get("horizons", ())),
                     spacing=float(doc.get("spacing", 1.0)),
                     replicas=int(doc.get("replicas", 100)),
                     seed=int(doc.get("seed", 0)),
                     out=str(doc.get("out", "run-out")),
                     check=bool(doc.get("check", False)),
                     options=dict(doc.get("options", {}))).validate()


def load_config_file(path) -> dict:
    """Plain key = value text; comma-separated lists; '#' comments.

    Unknown keys become experiment options.
    """
    known_lists = {"hurst", "horizons"}
    known_scalars = {"experiment", "spacing", "replicas", "seed", "out",
                     "check"}
    doc: dict = {"options": {}}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in known_lists:
                doc[key] = tuple(float(v) for v in value.split(","))
            elif key == "experiment" or key == "out":
                doc[key] = value
            elif key == "check":
                doc[key] = value.lower() in ("1", "true", "yes")
            elif key in known_scalars:
                doc[key] = float(value) if key == "spacing" else int(value)
            else:
                doc["options"][key] = value
    return doc


# ---------------------------------------------------------------------------
# worker pool
# ---------------------------------------------------------------------------

def worker_count() -> int:
    cap = os.environ.get("BURGERSLAB_WORKERS")
    workers = os.cpu_count() or 1
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"BURGERSLAB_WORKERS must be an integer, "
                              f"got {cap!r}")
    return workers


def _pool_map(fn, items):
    """Map preserving order; parallel across items when allowed.  Each item
    must be deterministic, so parallelism cannot change outputs."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_sample(cfg: RunConfig, outdir: Path) -> dict:
    points = cfg.opt("points", 256)
    method = cfg.opt("method", "fast")
    if method not in ("fast", "exact"):
        raise ConfigError(f"option method must be fast or exact, got {method!r}")
    sampler = sample_fbm_fast if method == "fast" else sample_fbm_exact
    grid = SampleGrid.one_sided(cfg.spacing, points)
    index = []
    for h in cfg.hurst:
        for rep in range(cfg.replicas):
            path = sampler(h, grid, RandomnessSpec(cfg.seed, rep))
            name = f"path_h{h:g}_r{rep}.csv"
            path.to_csv(outdir / name)
            index.append({"h": h, "replica": rep, "file": name,
                          "max": float(path.values.max()),
                          "min": float(path.values.min())})
    _write_jsonl(outdir / "index.jsonl", index)
    return {"paths": len(index), "checks": []}


def run_solve(cfg: RunConfig, outdir: Path) -> dict:
    half = cfg.opt("half-points", 512)
    t = cfg.opt("time", 1.0)
    rows = []
    for h in cfg.hurst:
        grid = SampleGrid.anchored(cfg.spacing, half, half)
        for rep in range(cfg.replicas):
            u0 = sample_fbm_fast(h, grid, RandomnessSpec(cfg.seed, rep))
            sol = solve(u0, t)
            stem = f"h{h:g}_r{rep}"
            sol.to_csv(outdir / f"solution_{stem}.csv")
            sol.clusters_to_jsonl(outdir / f"clusters_{stem}.jsonl", u0)
            rows.append({"h": h, "replica": rep,
                         "contacts": int(len(sol.contact_indices)),
                         "clusters": len(sol.shock_clusters)})
    _write_jsonl(outdir / "summary.jsonl", rows)
    return {"solves": len(rows), "checks": []}


def _dim_cell(args):
    h, cfg_doc = args
    cfg = config_from_dict(cfg_doc)
    log2n = cfg.opt("grid-log2", 16)
    n = 2 ** log2n
    scales = [2.0 ** -j for j in range(4, 11)]
    edge = 0.05
    grid = SampleGrid.anchored(2.0 / n, n // 2, n // 2)
    window = (-1.0 + edge, 1.0 - edge)
    records = []
    for rep in range(cfg.replicas):
        u0 = sample_fbm_fast(h, grid, RandomnessSpec(cfg.seed, rep))
        coords = solve(u0, cfg.opt("time", 1.0)).contact_coordinates
        pts = coords[(coords >= window[0]) & (coords <= window[1])]
        if pts.size < 4:
            # total collapse happens at small grids; no dimension to fit
            records.append({"h": h, "replica": rep, "slope": None,
                            "points": int(pts.size)})
            continue
        fit = dimension_estimate(pts, scales, window=window)
        records.append({"h": h, "replica": rep,
                        "slope": None if fit.degenerate else fit.slope,
                        "points": int(pts.size),
                        "max_residual": fit.max_residual,
                        "split_discrepancy": fit.split_discrepancy})
    slopes = np.array([r["slope"] for r in records if r["slope"] is not None])
    summary = {"h": h,
               "slope": float(slopes.mean()) if slopes.size else None,
               "slope_se": float(slopes.std(ddof=1) / np.sqrt(slopes.size))
               if slopes.size > 1 else 0.0,
               "valid_replicas": int(slopes.size),
               "replicas": cfg.replicas, "grid_log2": log2n}
    return records, summary


def run_dim(cfg: RunConfig, outdir: Path) -> dict:
    doc = config_to_dict(cfg)
    results = _pool_map(_dim_cell, [(h, doc) for h in cfg.hurst])
    records = [r for cell, _ in results for r in cell]
    summaries = [s for _, s in results]
    _write_jsonl(outdir / "records.jsonl", records)
    _write_json(outdir / "summary.json",
                {f"h={s['h']:g}": s for s in summaries})
    for h in cfg.hurst:
        fit = _dim_replica_fit(cfg, h, replica=0)
        if fit is not None:
            fit.to_csv(outdir / f"fit_h{h:g}_scale_count.csv")
            fit.to_json(outdir / f"fit_h{h:g}.json")
    tol = cfg.opt("slope-tol", 0.1)
    checks = []
    for s in summaries:
        target = cfg.opt(f"target-h{s['h']:g}", s["h"])
        got = s["slope"]
        checks.append({"name": f"dim slope h={s['h']:g}",
                       "pass": bool(got is not None
                                    and abs(got - target) <= tol),
                       "got": got, "target": target, "tol": tol})
    flagged = any(s["valid_replicas"] < s["replicas"] for s in summaries)
    return {"summaries": summaries, "checks": checks, "flagged": flagged}


def _dim_replica_fit(cfg: RunConfig, h: float, replica: int):
    """Per-scale counts of one replica, exported as the plot-ready table."""
    log2n = cfg.opt("grid-log2", 16)
    n = 2 ** log2n
    grid = SampleGrid.anchored(2.0 / n, n // 2, n // 2)
    window = (-0.95, 0.95)
    u0 = sample_fbm_fast(h, grid, RandomnessSpec(cfg.seed, replica))
    coords = solve(u0, cfg.opt("time", 1.0)).contact_coordinates
    pts = coords[(coords >= window[0]) & (coords <= window[1])]
    if pts.size < 4:
        return None
    scales = [2.0 ** -j for j in range(4, 11)]
    fit = dimension_estimate(pts, scales, window=window)
    return None if fit.degenerate else fit


_KNOWN_EXPONENTS = {"fbm_max": lambda h: 1.0 - h,
                    "ifbm_one_sided": lambda h: 0.25 if h == 0.5 else None}
_EXPONENT_TOL = {"fbm_max": 0.07, "ifbm_one_sided": 0.08}


def _persist_cell(args):
    event_name, level, h, horizon, cfg_doc = args
    cfg = config_from_dict(cfg_doc)
    est = estimate_persistence(BarrierEvent(event_name, level, horizon), h,
                               cfg.spacing, cfg.replicas, cfg.seed)
    rec = est.record()
    rec.update({"event": event_name, "level": level, "h": h})
    return rec, est


def run_persist(cfg: RunConfig, outdir: Path) -> dict:
    events = str(cfg.opt("events", "fbm_max")).split(",")
    level = cfg.opt("level", 1.0)
    cells = [(ev, level, h, t, config_to_dict(cfg))
             for ev in events for h in cfg.hurst for t in sorted(cfg.horizons)]
    results = _pool_map(_persist_cell, cells)
    _write_jsonl(outdir / "records.jsonl", [rec for rec, _ in results])
    fits = {}
    checks = []
    flagged = False
    for ev in events:
        for h in cfg.hurst:
            ests = [est for (c, (rec, est)) in zip(cells, results)
                    if c[0] == ev and c[2] == h]
            if len(ests) < 4:
                continue
            fit = exponent_fit(ests)
            key = f"{ev} h={h:g}"
            fits[key] = fit.summary()
            flagged = flagged or fit.degenerate or bool(fit.excluded)
            known = _KNOWN_EXPONENTS.get(ev, lambda _h: None)(h)
            if cfg.check and known is not None:
                tol = cfg.opt("slope-tol", _EXPONENT_TOL.get(ev, 0.1))
                checks.append({"name": f"exponent {key}",
                               "pass": bool(abs(fit.slope - known) <= tol),
                               "got": fit.slope, "target": known, "tol": tol})
    if fits:
        _write_json(outdir / "fits.json", fits)
    return {"cells": len(cells), "checks": checks, "flagged": flagged}


def _chain_cell(args):
    h, cfg_doc = args
    cfg = config_from_dict(cfg_doc)
    report = verify_chain(h, cfg.opt("n", 64), cfg.replicas, cfg.seed)
    return report.to_json()


def run_chain(cfg: RunConfig, outdir: Path) -> dict:
    docs = _pool_map(_chain_cell, [(h, config_to_dict(cfg)) for h in cfg.hurst])
    merged = {f"h={h:g}": doc for h, doc in zip(cfg.hurst, docs)}
    _write_json(outdir / "chain.json", merged)
    checks = [{"name": f"chain h={h:g}", "pass": doc["pass"]}
              for h, doc in zip(cfg.hurst, docs)]
    return {"chain": merged, "checks": checks}


def _rkhs_trend(space, name: str, cfg: RunConfig):
    if name == "combined0":
        return combined_trend(space, 0)
    if name == "combined1":
        return combined_trend(space, 1)
    if name == "psi":
        return psi_trend(space.grid)
    if name.startswith("psi*"):
        factor = float(name.split("*", 1)[1])
        base = psi_trend(space.grid)
        return TrendFunction(factor * base.values, label=f"psi*{factor:g}")
    if name.startswith("covcol@"):
        coord, _, factor = name[len("covcol@"):].partition("*")
        return covariance_column_trend(space, float(coord),
                                       float(factor) if factor else 1.0)
    if name == "zero":
        return TrendFunction(np.zeros(space.grid.count), "zero")
    raise ConfigError(f"unknown rkhs trend {name!r}")


def run_rkhs_verify(cfg: RunConfig, outdir: Path) -> dict:
    half = cfg.opt("half-points", 16)
    trend_name = cfg.opt("trend", "combined0")
    level = cfg.opt("level", 2.0)
    reports = {}
    checks = []
    flagged = False
    for h in cfg.hurst:
        grid = SampleGrid.anchored(2.0 / half, half, half)
        space = build_space(grid, h)
        trend = _rkhs_trend(space, trend_name, cfg)
        rep = verify_shift_inequality(space, trend, level, cfg.replicas,
                                      cfg.seed)
        key = f"h={h:g}"
        reports[key] = rep.to_json()
        flagged = flagged or rep.inconclusive
        checks.append({"name": f"shift bound {trend_name} {key}",
                       "pass": bool(rep.passed)})
    _write_json(outdir / "shift.json", reports)
    return {"reports": reports, "checks": checks, "flagged": flagged}


_RUNNERS = {"sample": run_sample, "solve": run_solve, "dim": run_dim,
            "persist": run_persist, "chain": run_chain,
            "rkhs-verify": run_rkhs_verify}


def run_experiment(cfg: RunConfig) -> tuple[int, dict]:
    """Execute an experiment; returns (exit_status, summary).

    Exit statuses: 0 success, 2 numerical failure (flagged estimates),
    3 failed --check assertions.  Config errors raise ConfigError (exit 1
    at the CLI boundary).
    """
    cfg = cfg.validate()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    summary = _RUNNERS[cfg.experiment](cfg, outdir)
    wall = time.time() - started
    write_manifest(cfg, outdir, wall)
    status = 0
    if summary.get("flagged"):
        status = 2
    if cfg.check and any(not c["pass"] for c in summary.get("checks", [])):
        status = 3
    return status, summary


def write_manifest(cfg: RunConfig, outdir: Path, wall_time_s: float) -> None:
    _write_json(outdir / "manifest.json",
                {"config": config_to_dict(cfg), "tool_version": __version__,
                 "wall_time_s": wall_time_s})


def rerun_from_manifest(manifest_path, out: str | None = None) -> tuple[int, dict]:
    with open(manifest_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = config_from_dict(doc["config"])
    if out is not None:
        cfg = replace(cfg, out=out)
    return run_experiment(cfg)


def _write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
