import pytest

from cases import boundary, corridor, triangle
from gridsched.experiments import (
    comparison_csv,
    load_scenario_sweep,
    load_sweep_csv,
    penalty_sweep,
    penalty_sweep_csv,
    run_variant_comparison,
    solve_variant,
    total_cdr,
    worker_count,
)
from gridsched.formulation import ModelVariant

V = ModelVariant


def test_comparison_has_one_row_per_variant_in_order():
    rows = run_variant_comparison(corridor(), 0.0, workers=1)
    assert [r.variant for r in rows] == list(V)
    # corridor costs worked out by the brute-force oracle
    assert [r.objective for r in rows] == pytest.approx([1125.0, 1125.0, 825.0, 825.0])


def test_comparison_cdr_columns():
    rows = run_variant_comparison(corridor(), 0.0, workers=1)
    by = {r.variant: r for r in rows}
    assert by[V.T_SCUC].cdr_line_mw is None and by[V.T_SCUC].cdr_gen_mw is None
    assert by[V.T_SCUC_CDR].cdr_line_mw == pytest.approx(20.0)
    assert by[V.T_SCUC_CDR].cdr_gen_mw is None
    assert by[V.TG_SCUC_CDR].cdr_gen_mw is not None


def test_comparison_csv_layout():
    text = comparison_csv(run_variant_comparison(triangle(), 0.0, workers=1))
    lines = text.splitlines()
    assert lines[0] == "variant,cost,gap,time_s,cdr_line_mw,cdr_gen_mw"
    assert [ln.split(",")[0] for ln in lines[1:]] == [v.label for v in V]
    assert lines[1].endswith(",NA,NA")


def test_penalty_sweep_is_monotone_and_reaches_zero():
    rows = penalty_sweep(corridor(), [1000.0, 0.0, 50.0], V.T_SCUC_CDR, 0.0, workers=1)
    assert [r.parameter for r in rows] == [0.0, 50.0, 1000.0]
    cdr = [total_cdr(r) for r in rows]
    assert cdr == pytest.approx([20.0, 10.0, 0.0], abs=1e-6)
    costs = [r.objective for r in rows]
    assert costs == sorted(costs)
    assert costs[-1] == pytest.approx(1125.0)


def test_penalty_sweep_csv():
    rows = penalty_sweep(corridor(), [0.0, 1000.0], V.T_SCUC_CDR, 0.0, workers=1)
    lines = penalty_sweep_csv(rows).splitlines()
    assert lines[0] == "penalty,cost,cdr_line_mw,cdr_gen_mw,gap"
    assert lines[1].split(",")[3] == "NA"  # no generator contingencies in a T variant
    assert len(lines) == 3


def test_penalty_sweep_rejects_non_cdr_variant():
    with pytest.raises(ValueError):
        penalty_sweep(corridor(), [0.0], V.TG_SCUC)


def test_load_sweep_locates_boundary():
    rows = load_scenario_sweep(boundary(), [1.2, 1.0, 1.21], workers=1, gap_target=0.0)
    got = [(r.parameter, r.variant, r.feasible) for r in rows]
    assert got == [
        (1.0, V.TG_SCUC, False), (1.0, V.TG_SCUC_CDR, True),
        (1.2, V.TG_SCUC, False), (1.2, V.TG_SCUC_CDR, True),
        (1.21, V.TG_SCUC, False), (1.21, V.TG_SCUC_CDR, False),
    ]
    text = load_sweep_csv(rows).splitlines()
    assert text[0] == "factor,variant,feasible,cost,cdr_line_mw,cdr_gen_mw"
    assert text[1] == "1.0,TG-SCUC,false,NA,NA,NA"


def test_parallel_matches_serial():
    serial = penalty_sweep(corridor(), [0.0, 50.0, 1000.0, 10.0], V.TG_SCUC_CDR, 0.0, workers=1)
    parallel = penalty_sweep(corridor(), [0.0, 50.0, 1000.0, 10.0], V.TG_SCUC_CDR, 0.0, workers=3)
    assert [(r.parameter, r.objective, r.cdr_line_mw) for r in serial] == \
        [(r.parameter, r.objective, r.cdr_line_mw) for r in parallel]


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("GRIDSCHED_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("GRIDSCHED_THREADS", "0")
    assert worker_count() == 1


def test_infeasible_variant_has_no_schedule():
    res = solve_variant(boundary(), V.T_SCUC, 0.0)
    assert not res.feasible and res.objective is None and res.status == "infeasible"
