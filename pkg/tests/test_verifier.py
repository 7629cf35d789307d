import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cases import boundary, build, corridor, document, gen, line, random_tiny, triangle
from gridsched.case_model import with_uniform_penalty
from gridsched.experiments import solve_variant
from gridsched.formulation import ModelOptions, ModelVariant, assemble_model, contingencies_for
from gridsched.grid_analysis import ContingencySet
from gridsched.mini_solver import solve_milp
from gridsched.verifier import (
    OracleLimitError,
    ScheduleSolution,
    brute_force_optimum,
    check_solution,
)
from perturb import perturb

V = ModelVariant
NO_CONTINGENCIES = ContingencySet((), False, False)


def solved(case, variant, options=ModelOptions()):
    res = solve_variant(case, variant, 0.0, options=options)
    assert res.feasible, res.status
    return res


@pytest.mark.parametrize("variant", list(V))
def test_solver_output_passes(variant):
    res = solved(corridor(penalty=50.0), variant)
    rep = check_solution(corridor(penalty=50.0), res.contingencies, variant, res.schedule)
    assert rep.passed, rep.to_csv()
    assert rep.objective_recomputed == pytest.approx(res.objective, rel=1e-9)


def test_one_mw_injection_flags_balance_by_exactly_one():
    case = triangle()
    res = solved(case, V.T_SCUC)
    bad = dataclasses.replace(res.schedule, P=res.schedule.P.copy())
    bad.P[0, 0] += 1.0
    rep = check_solution(case, res.contingencies, V.T_SCUC, bad)
    bal = [v for v in rep.violations if v.tag == "Eq12"]
    assert [v.subscripts for v in bal] == ["n1_t1"]
    assert bal[0].slack == pytest.approx(-1.0)
    assert bal[0].lhs - bal[0].rhs == pytest.approx(1.0)


def test_cdr_above_cap_is_flagged():
    case = triangle((100.0,), penalty=10.0)
    res = solved(case, V.T_SCUC_CDR)
    bad = dataclasses.replace(res.schedule, cdr=res.schedule.cdr.copy())
    bad.cdr[2, 0, 0] = 0.4 * 100.0
    rep = check_solution(case, res.contingencies, V.T_SCUC_CDR, bad)
    caps = [v for v in rep.violations if v.tag == "Eq24"]
    assert caps and caps[0].subscripts == "n3_ck1_t1"
    assert caps[0].rhs == pytest.approx(30.0)


def test_fractional_commitment_is_flagged():
    case = triangle()
    res = solved(case, V.T_SCUC)
    bad = dataclasses.replace(res.schedule, u=res.schedule.u.astype(float).copy())
    bad.u[1, 0] = 0.5
    assert "Eq11_u_g2_t1" in {v.row_name for v in check_solution(case, res.contingencies, V.T_SCUC, bad).violations}


def test_shape_mismatch_raises():
    case = triangle()
    res = solved(case, V.T_SCUC)
    bad = dataclasses.replace(res.schedule, P=np.zeros((5, 5)))
    with pytest.raises(ValueError, match="P"):
        check_solution(case, res.contingencies, V.T_SCUC, bad)


def test_csv_is_sorted_and_parseable():
    case = triangle()
    res = solved(case, V.T_SCUC)
    bad = dataclasses.replace(res.schedule, P=res.schedule.P + 5.0)
    text = check_solution(case, res.contingencies, V.T_SCUC, bad).to_csv()
    rows = [r.split(",") for r in text.strip().splitlines()]
    assert rows[0] == ["equation", "subscripts", "lhs", "rhs", "slack"]
    nums = [int(r[0][2:]) for r in rows[1:]]
    assert nums == sorted(nums)


@pytest.mark.parametrize("seed", range(6))
def test_perturbations_flag_the_intended_row(seed):
    rng = np.random.default_rng(seed)
    case = corridor(penalty=50.0)
    for variant in V:
        res = solved(case, variant)
        model = assemble_model(case, res.contingencies, variant)
        for _ in range(5):
            name, bad = perturb(model, case, res.contingencies, res.schedule, rng)
            rep = check_solution(case, res.contingencies, variant, bad)
            assert name in {v.row_name for v in rep.violations}, (name, rep.to_csv())


def test_json_round_trip():
    case = corridor(penalty=50.0)
    res = solved(case, V.TG_SCUC_CDR)
    text = res.schedule.to_json(case)
    back = ScheduleSolution.from_json(text)
    assert back.variant is V.TG_SCUC_CDR
    assert back.to_json(case) == text
    assert check_solution(case, res.contingencies, V.TG_SCUC_CDR, back).passed


def one_unit():
    return build(document([1], [gen(1, 1, cost=10.0, nl=5.0, su=100.0, pmax=100.0)], [], {1: [50.0]}))


def test_oracle_single_unit_605():
    opts = ModelOptions(enforce_reserve=False)
    obj, sol = brute_force_optimum(one_unit(), NO_CONTINGENCIES, V.T_SCUC, options=opts)
    assert obj == pytest.approx(605.0)
    assert (sol.u[0, 0], sol.v[0, 0], sol.P[0, 0]) == pytest.approx((1, 1, 50))
    model = assemble_model(one_unit(), NO_CONTINGENCIES, V.T_SCUC, opts)
    assert solve_milp(model).objective == pytest.approx(obj, rel=1e-9)


def test_oracle_zero_demand_all_off():
    gens = [gen(1, 1, cost=10.0, nl=5.0), gen(2, 2, cost=20.0, nl=5.0)]
    case = build(document([1, 2], gens, [line(1, 1, 2), line(2, 1, 2)], {1: [0.0, 0.0]}))
    obj, sol = brute_force_optimum(case, contingencies_for(case, V.TG_SCUC), V.TG_SCUC)
    assert obj == 0.0
    assert not sol.u.any()


def test_oracle_two_units_two_hours():
    case = build(document(
        [1, 2, 3],
        [gen(1, 1, cost=10.0, nl=30.0, su=40.0, pmax=80.0, r10=40.0, up=2),
         gen(2, 2, cost=25.0, nl=10.0, su=5.0, pmax=80.0, pmin=10.0, r10=40.0)],
        [line(1, 1, 2), line(2, 1, 3), line(3, 2, 3)], {3: [40.0, 70.0]}))
    for variant in V:
        cset = contingencies_for(case, variant)
        obj, _ = brute_force_optimum(case, cset, variant)
        res = solve_milp(assemble_model(case, cset, variant))
        if obj is None:
            assert res.status == "infeasible"
        else:
            assert res.objective == pytest.approx(obj, rel=1e-6)


def test_oracle_limit():
    case = build(document([1], [gen(i, 1) for i in range(1, 8)], [], {1: [10.0, 10.0]}))
    with pytest.raises(OracleLimitError):
        brute_force_optimum(case, NO_CONTINGENCIES, V.T_SCUC)


def test_infeasible_boundary_case_has_no_oracle_optimum():
    case = boundary(1.0)
    assert brute_force_optimum(case, contingencies_for(case, V.T_SCUC), V.T_SCUC) == (None, None)


@pytest.mark.parametrize("seed", range(5))
def test_oracle_schedule_passes_verifier(seed):
    case = random_tiny(seed)
    for variant in V:
        cset = contingencies_for(case, variant)
        obj, sol = brute_force_optimum(case, cset, variant)
        if obj is not None:
            assert check_solution(case, cset, variant, sol).passed


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 5.0, 50.0]), st.sampled_from([0.1, 0.3, 0.5]))
def test_cdr_never_exceeds_cap(seed, penalty, cap):
    case = with_uniform_penalty(random_tiny(seed), penalty)
    case = dataclasses.replace(case, cdr=dataclasses.replace(case.cdr, cap_fraction=cap))
    res = solve_variant(case, V.TG_SCUC_CDR, 0.0)
    if not res.feasible:
        return
    limit = cap * case.demand[:, None, :]
    assert np.all(res.schedule.cdr <= limit * (1 + 1e-6) + 1e-9)
