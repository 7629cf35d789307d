"""Finite-difference price checks shared by the market and acceptance tests."""
import dataclasses

import numpy as np

from gridsched.case_model import LoadProfile
from gridsched.experiments import solve_variant
from gridsched.formulation import ModelOptions
from gridsched.market import compute_lmp, fixed_commitment_lp
from gridsched.mini_solver import solve_lp


def bumped(case, n, t, delta):
    d = case.demand.copy()
    d[n, t] += delta
    return dataclasses.replace(case, load=LoadProfile(d))


def fd_price(case, cset, variant, sol, n, t, eps=1e-3, options=ModelOptions()):
    """Central difference of the fixed-commitment LP optimum in nodal demand."""
    vals = []
    for delta in (eps, -eps):
        res = solve_lp(fixed_commitment_lp(bumped(case, n, t, delta), cset, variant, sol.u, sol.v, options))
        assert res.status == "optimal"
        vals.append(res.objective)
    return (vals[0] - vals[1]) / (2 * eps)


def base_rhs_price(lp, name, eps=1e-3):
    """Central difference of the LP optimum in the right-hand side of one row."""
    i = lp.row_position(name)
    vals = []
    for delta in (eps, -eps):
        rhs = lp.rhs.copy()
        rhs[i] += delta
        res = solve_lp(dataclasses.replace(lp, rhs=rhs))
        assert res.status == "optimal"
        vals.append(res.objective)
    return (vals[0] - vals[1]) / (2 * eps)


def balance_rows(lp, bus_id, t):
    """Base-case balance row and the per-contingency balance rows of one bus and hour."""
    base = f"Eq12_n{bus_id}_t{t + 1}"
    post = [i for i, nm in enumerate(lp.row_names)
            if nm.startswith(("Eq22_", "Eq23_")) and nm.startswith(f"n{bus_id}_c", 5) and nm.endswith(f"_t{t + 1}")]
    return base, post


def unpriced_security_points(case, variant):
    """Solve a case and return (lmp, fd) pairs at every bus-hour whose post-contingency
    balance rows carry zero dual, or None if the case is infeasible."""
    res = solve_variant(case, variant, 0.0)
    if not res.feasible:
        return None
    lp = fixed_commitment_lp(case, res.contingencies, variant, res.schedule.u, res.schedule.v)
    duals = solve_lp(lp).duals
    lmp = compute_lmp(case, res.contingencies, variant, res.schedule)
    out = []
    for n, bus in enumerate(case.buses):
        for t in range(case.demand.shape[1]):
            _, post = balance_rows(lp, bus.id, t)
            if np.all(np.abs(duals[post]) < 1e-9):
                out.append((lmp[n, t], fd_price(case, res.contingencies, variant, res.schedule, n, t)))
    return out
