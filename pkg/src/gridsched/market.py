"""Market settlement from a solved schedule.

Prices come from the fixed-commitment LP: every u and v is pinned to the
schedule, integrality is dropped, and the dual of each base-case nodal balance
row is the LMP at that bus and hour.  Contingency rows stay in the LP, so
security constraints that bind show up in the prices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .case_model import SystemCase
from .formulation import ModelOptions, ModelVariant, assemble_model
from .grid_analysis import ContingencySet
from .mini_solver import solve_lp

__all__ = ["MarketReport", "MarketError", "compute_lmp", "market_summary", "fixed_commitment_lp"]


class MarketError(RuntimeError):
    pass


@dataclass
class MarketReport:
    lmp: np.ndarray                     # $/MWh, (N, T)
    load_payment: float
    generator_revenue: float
    average_lmp: float
    classification: dict[int, str]      # generator id -> always_on | always_off | marginal
    startups_first: int
    startups_later: int
    total_commitment: int

    def group(self, label: str) -> list[int]:
        return [g for g, c in self.classification.items() if c == label]

    def summary_csv(self) -> str:
        rows = [
            "metric,value",
            f"load_payment,{self.load_payment!r}",
            f"generator_revenue,{self.generator_revenue!r}",
            f"average_lmp,{self.average_lmp!r}",
            f"always_on,{' '.join(map(str, self.group('always_on')))}",
            f"always_off,{' '.join(map(str, self.group('always_off')))}",
            f"marginal,{' '.join(map(str, self.group('marginal')))}",
            f"startups_t1,{self.startups_first}",
            f"startups_after_t1,{self.startups_later}",
            f"total_commitment,{self.total_commitment}",
        ]
        return "\n".join(rows) + "\n"


def lmp_csv(case: SystemCase, lmp: np.ndarray) -> str:
    head = "bus," + ",".join(f"t{t + 1}" for t in range(case.horizon))
    body = [f"{b.id}," + ",".join(repr(float(x) + 0.0) for x in row) for b, row in zip(case.buses, lmp)]
    return "\n".join([head] + body) + "\n"


def fixed_commitment_lp(case: SystemCase, contingencies: ContingencySet, variant: ModelVariant,
                        u: np.ndarray, v: np.ndarray, options: ModelOptions = ModelOptions()):
    model = assemble_model(case, contingencies, variant, options)
    return model.fix_commitment(np.round(u), np.round(v))


def compute_lmp(case: SystemCase, contingencies: ContingencySet, variant: ModelVariant, solution,
                options: ModelOptions = ModelOptions()) -> np.ndarray:
    """Dual of each base-case balance row of the fixed-commitment LP, (N, T) in $/MWh."""
    lp = fixed_commitment_lp(case, contingencies, variant, solution.u, solution.v, options)
    res = solve_lp(lp)
    if res.status != "optimal":
        raise MarketError(f"fixed-commitment LP is {res.status}")
    lmp = np.empty((len(case.buses), case.horizon))
    for n, bus in enumerate(case.buses):
        for t in range(case.horizon):
            lmp[n, t] = res.duals[lp.row_position(f"Eq12_n{bus.id}_t{t + 1}")]
    return lmp


def market_summary(case: SystemCase, lmp: np.ndarray, solution) -> MarketReport:
    d = case.demand
    u = np.round(solution.u).astype(int)
    v = np.round(solution.v).astype(int)
    gen_bus = [case.bus_position(g.bus) for g in case.generators]
    load_payment = float(np.sum(lmp * d))
    revenue = float(sum(lmp[gen_bus[g]] @ solution.P[g] for g in range(len(case.generators))))
    classes = {}
    for g, gen in enumerate(case.generators):
        if u[g].all():
            classes[gen.id] = "always_on"
        elif not u[g].any():
            classes[gen.id] = "always_off"
        else:
            classes[gen.id] = "marginal"
    return MarketReport(
        lmp=lmp,
        load_payment=load_payment,
        generator_revenue=revenue,
        average_lmp=float(lmp.mean()) if lmp.size else 0.0,
        classification=classes,
        startups_first=int(v[:, 0].sum()) if v.size else 0,
        startups_later=int(v[:, 1:].sum()) if v.size else 0,
        total_commitment=int(u.sum()),
    )
