"""Per-schedule metrics, multi-solver comparison and report files."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .scenario import Scenario
from .schedulers import Schedule, validate

REPORT_VERSION = 1
BASELINES = ("max-resolution", "max-targets")


class InvalidScheduleError(ValueError):
    pass


@dataclass
class MetricsRow:
    solver: str
    seed: int
    n_targets: int
    observation_period_s: float
    p_clouds: float
    p_cn2: float
    total_profit: float = 0.0
    n_scheduled: int = 0
    n_positive: int = 0
    precision: Optional[float] = None
    discarded_count: int = 0
    energy_total: float = 0.0
    energy_wasted: float = 0.0
    runtime_ms: Optional[float] = None
    error: str = ""

    @property
    def config(self) -> tuple:
        return (self.n_targets, self.observation_period_s, self.p_clouds, self.p_cn2)


def _scenario_fields(s: Scenario) -> dict:
    return {
        "seed": s.seed,
        "n_targets": s.n_targets,
        "observation_period_s": s.observation_period_s,
        "p_clouds": round(s.clouds.coverage_fraction, 2),
        "p_cn2": round(s.turbulence.exceed_fraction(s.thresholds.cn2_max), 2),
    }


def precision(n_positive: int, n_scheduled: int) -> Optional[float]:
    """Share of scheduled captures with positive profit; None for an empty schedule."""
    return n_positive / n_scheduled if n_scheduled else None


def reduction_pct(baseline: float, model: float) -> Optional[float]:
    return 100.0 * (baseline - model) / baseline if baseline else None


def score(s: Scenario, schedule: Schedule, solver: str | None = None, runtime_ms=None) -> MetricsRow:
    problems = validate(s, schedule)
    if problems:
        raise InvalidScheduleError("; ".join(str(p) for p in problems))
    n_sch, n_pos = schedule.n_scheduled, schedule.n_positive
    return MetricsRow(
        solver=solver or schedule.solver,
        **_scenario_fields(s),
        total_profit=schedule.total_profit,
        n_scheduled=n_sch,
        n_positive=n_pos,
        precision=precision(n_pos, n_sch),
        discarded_count=n_sch - n_pos,
        energy_total=schedule.energy_total,
        energy_wasted=schedule.energy_wasted,
        runtime_ms=runtime_ms,
    )


def _run_instance(args):
    solvers, s, record_runtime = args
    rows = []
    for name, solve in solvers.items():
        t0 = time.perf_counter()
        try:
            sch = solve(s)
            ms = 1e3 * (time.perf_counter() - t0) if record_runtime else None
            rows.append(score(s, sch, name, ms))
        except Exception as exc:  # recorded per instance, not fatal
            rows.append(MetricsRow(solver=name, **_scenario_fields(s), error=f"{type(exc).__name__}: {exc}"))
    return rows


@dataclass
class EvaluationReport:
    rows: list = field(default_factory=list)
    solvers: tuple = ()

    def ok_rows(self, solver=None, config=None):
        return [
            r for r in self.rows
            if not r.error and (solver is None or r.solver == solver) and (config is None or r.config == config)
        ]

    def configs(self) -> list:
        return sorted({r.config for r in self.rows})

    def aggregate(self, solver: str, config=None) -> dict:
        rows = self.ok_rows(solver, config)
        failed = sum(1 for r in self.rows if r.error and r.solver == solver and (config is None or r.config == config))
        precs = [r.precision for r in rows if r.precision is not None]
        mean = lambda xs: float(np.mean(xs)) if xs else None
        tot_sch = sum(r.n_scheduled for r in rows)
        return {
            "solver": solver,
            "instances": len(rows),
            "failures": failed,
            "mean_profit": mean([r.total_profit for r in rows]),
            "mean_precision": mean(precs),
            "aggregate_precision": (sum(r.n_positive for r in rows) / tot_sch) if tot_sch else None,
            "mean_scheduled": mean([r.n_scheduled for r in rows]),
            "discarded_total": sum(r.discarded_count for r in rows),
            "energy_total": float(sum(r.energy_total for r in rows)),
            "energy_wasted": float(sum(r.energy_wasted for r in rows)),
            "mean_energy_wasted": mean([r.energy_wasted for r in rows]),
        }

    def reductions(self, solver: str, config=None) -> dict:
        """Profit ratio and discarded/energy-waste reductions of ``solver`` against each baseline present."""
        me = self.aggregate(solver, config)
        out = {}
        for base in BASELINES:
            if base == solver or base not in self.solvers:
                continue
            b = self.aggregate(base, config)
            out[base] = {
                "profit_ratio": (me["mean_profit"] / b["mean_profit"]) if me["mean_profit"] is not None and b["mean_profit"] else None,
                "discarded_reduction_pct": reduction_pct(b["discarded_total"], me["discarded_total"]),
                "energy_waste_reduction_pct": reduction_pct(b["energy_wasted"], me["energy_wasted"]),
            }
        return out

    def summary(self) -> dict:
        per_config = []
        for cfg in self.configs():
            per_config.append({
                "n_targets": cfg[0],
                "observation_period_s": cfg[1],
                "p_clouds": cfg[2],
                "p_cn2": cfg[3],
                "solvers": {s: self.aggregate(s, cfg) for s in self.solvers},
                "reductions": {s: self.reductions(s, cfg) for s in self.solvers if s not in BASELINES},
            })
        return {
            "schema_version": REPORT_VERSION,
            "kind": "evaluation-summary",
            "statistic": "mean over instances; reductions from per-configuration sums",
            "solvers": list(self.solvers),
            "overall": {s: self.aggregate(s) for s in self.solvers},
            "configurations": per_config,
        }


def compare(solvers: dict, scenarios, jobs: int = 1, record_runtime: bool = False) -> EvaluationReport:
    """Run every solver on every scenario.

    ``solvers`` maps a name to ``scenario -> Schedule``; with ``jobs > 1``
    they must be picklable. Row order is (scenario, solver) regardless of
    ``jobs``.
    """
    tasks = [(solvers, s, record_runtime) for s in scenarios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_run_instance, tasks))
    else:
        chunks = [_run_instance(t) for t in tasks]
    return EvaluationReport([r for c in chunks for r in c], tuple(solvers))


# -- files -------------------------------------------------------------------

ROW_FIELDS = [f for f in MetricsRow.__dataclass_fields__]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def write_rows_csv(report: EvaluationReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["schema_version"] + ROW_FIELDS)
        for r in report.rows:
            d = asdict(r)
            w.writerow([REPORT_VERSION] + [_cell(d[k]) for k in ROW_FIELDS])


def write_summary_json(report: EvaluationReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.summary(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_plot_csv(report: EvaluationReport, path) -> None:
    """Mean profit and precision per (configuration, solver), one line per point."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["schema_version", "n_targets", "observation_period_s", "p_clouds", "p_cn2",
                    "solver", "mean_profit", "mean_precision", "instances"])
        for cfg in report.configs():
            for s in report.solvers:
                a = report.aggregate(s, cfg)
                w.writerow([REPORT_VERSION, *cfg, s, _cell(a["mean_profit"]), _cell(a["mean_precision"]), a["instances"]])


def write_report(report: EvaluationReport, out_dir) -> dict:
    """Write rows, summary and plot CSV into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "rows": os.path.join(out_dir, "report.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
        "plot": os.path.join(out_dir, "plot.csv"),
    }
    write_rows_csv(report, paths["rows"])
    write_summary_json(report, paths["summary"])
    write_plot_csv(report, paths["plot"])
    return paths
