"""Study drivers: variant comparison, CDR penalty sweep and load-scaling sweep."""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .case_model import SystemCase, scale_loads, with_uniform_penalty
from .formulation import ModelOptions, ModelVariant, assemble_model, contingencies_for
from .grid_analysis import ContingencyKind, ContingencySet
from .mini_solver import MilpSolution, solve_milp
from .verifier import ScheduleSolution, schedule_from_vector

__all__ = [
    "SolveResult",
    "SweepRow",
    "solve_variant",
    "cdr_totals",
    "run_variant_comparison",
    "penalty_sweep",
    "load_scenario_sweep",
    "worker_count",
]


@dataclass
class SolveResult:
    variant: ModelVariant
    status: str
    contingencies: ContingencySet
    milp: MilpSolution
    schedule: ScheduleSolution | None
    time_s: float

    @property
    def feasible(self) -> bool:
        return self.schedule is not None

    @property
    def objective(self) -> float | None:
        return self.schedule.objective if self.schedule is not None else None


def solve_variant(case: SystemCase, variant: ModelVariant, gap_target: float = 0.01,
                  time_limit: float | None = None, node_limit: int | None = None,
                  options: ModelOptions = ModelOptions(),
                  contingencies: ContingencySet | None = None) -> SolveResult:
    """Assemble and solve one variant with the built-in solver."""
    variant = ModelVariant(variant)
    cset = contingencies_for(case, variant) if contingencies is None else contingencies
    model = assemble_model(case, cset, variant, options)
    t0 = time.perf_counter()
    res = solve_milp(model, gap_target, time_limit, node_limit)
    elapsed = time.perf_counter() - t0
    sched = None
    if res.has_solution:
        sched = schedule_from_vector(model, case, cset, res.x, res.objective, res.achieved_gap, res.status)
    return SolveResult(variant, res.status, cset, res, sched, elapsed)


def cdr_totals(contingencies: ContingencySet, schedule: ScheduleSolution | None) -> tuple[float, float]:
    """Total curtailment in MW summed over buses, hours and contingencies, split (line, generator)."""
    if schedule is None or schedule.cdr is None:
        return 0.0, 0.0
    lines = contingencies.of_kind(ContingencyKind.LINE)
    gens = contingencies.of_kind(ContingencyKind.GENERATOR)
    return float(schedule.cdr[:, lines].sum()), float(schedule.cdr[:, gens].sum())


@dataclass
class SweepRow:
    parameter: float
    variant: ModelVariant
    status: str
    objective: float | None
    cdr_line_mw: float | None
    cdr_gen_mw: float | None
    gap: float | None
    time_s: float

    @property
    def feasible(self) -> bool:
        return self.objective is not None


def _row(parameter, result: SolveResult) -> SweepRow:
    if result.feasible and result.variant.uses_cdr:
        line, gen = cdr_totals(result.contingencies, result.schedule)
        if not result.variant.with_generators:
            gen = None
    else:
        line = gen = None
    return SweepRow(parameter, result.variant, result.status, result.objective, line, gen,
                    result.milp.achieved_gap, result.time_s)


def worker_count() -> int:
    env = os.environ.get("GRIDSCHED_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run(job):
    parameter, case, variant, gap, time_limit, options = job
    return _row(parameter, solve_variant(case, variant, gap, time_limit, options=options))


def _map(jobs, workers):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        # map preserves submission order whatever the completion order
        return list(pool.map(_run, jobs))


def run_variant_comparison(case: SystemCase, gap_target: float = 0.01, time_limit: float | None = None,
                           options: ModelOptions = ModelOptions(), workers: int | None = None) -> list[SweepRow]:
    """Solve all four variants at the same gap target; infeasibility is recorded, not raised."""
    jobs = [(0.0, case, v, gap_target, time_limit, options) for v in ModelVariant]
    return _map(jobs, workers)


def penalty_sweep(case: SystemCase, penalties, variant: ModelVariant = ModelVariant.TG_SCUC_CDR,
                  gap_target: float = 0.01, time_limit: float | None = None,
                  options: ModelOptions = ModelOptions(), workers: int | None = None) -> list[SweepRow]:
    """One solve per penalty value, applied uniformly to every bus."""
    variant = ModelVariant(variant)
    if not variant.uses_cdr:
        raise ValueError("penalty sweep needs a CDR variant")
    jobs = [(float(p), with_uniform_penalty(case, p), variant, gap_target, time_limit, options)
            for p in sorted(penalties)]
    return _map(jobs, workers)


def load_scenario_sweep(case: SystemCase, factors, variants=(ModelVariant.TG_SCUC, ModelVariant.TG_SCUC_CDR),
                        gap_target: float = 0.01, time_limit: float | None = None,
                        options: ModelOptions = ModelOptions(), workers: int | None = None) -> list[SweepRow]:
    jobs = [(float(f), scale_loads(case, f), ModelVariant(v), gap_target, time_limit, options)
            for f in sorted(factors) for v in variants]
    return _map(jobs, workers)


def _fmt(x) -> str:
    if x is None:
        return "NA"
    return repr(float(x))


def comparison_csv(rows: list[SweepRow]) -> str:
    out = ["variant,cost,gap,time_s,cdr_line_mw,cdr_gen_mw"]
    for r in rows:
        out.append(f"{r.variant.label},{_fmt(r.objective)},{_fmt(r.gap)},{r.time_s:.3f},"
                   f"{_fmt(r.cdr_line_mw)},{_fmt(r.cdr_gen_mw)}")
    return "\n".join(out) + "\n"


def penalty_sweep_csv(rows: list[SweepRow]) -> str:
    out = ["penalty,cost,cdr_line_mw,cdr_gen_mw,gap"]
    for r in rows:
        out.append(f"{_fmt(r.parameter)},{_fmt(r.objective)},{_fmt(r.cdr_line_mw)},{_fmt(r.cdr_gen_mw)},{_fmt(r.gap)}")
    return "\n".join(out) + "\n"


def load_sweep_csv(rows: list[SweepRow]) -> str:
    out = ["factor,variant,feasible,cost,cdr_line_mw,cdr_gen_mw"]
    for r in rows:
        out.append(f"{_fmt(r.parameter)},{r.variant.label},{str(r.feasible).lower()},{_fmt(r.objective)},"
                   f"{_fmt(r.cdr_line_mw)},{_fmt(r.cdr_gen_mw)}")
    return "\n".join(out) + "\n"


def total_cdr(row: SweepRow) -> float:
    return float(np.nansum([row.cdr_line_mw or 0.0, row.cdr_gen_mw or 0.0]))
