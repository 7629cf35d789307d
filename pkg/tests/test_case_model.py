import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cases import build, document, gen, line, random_tiny, triangle
from gridsched import rts24_path
from gridsched.case_model import (
    CaseError,
    load_case,
    parse_case,
    scale_loads,
    serialize_case,
    validate_case,
    with_uniform_penalty,
)


def one_bus(**kw):
    return document([1], [gen(1, 1, cost=20.0)], [], {1: [50.0]}, **kw)


def test_minimal_one_bus_case():
    case = build(one_bus())
    assert (len(case.buses), len(case.generators), len(case.lines)) == (1, 1, 0)
    assert case.horizon == 1
    assert case.demand[0, 0] == 50.0


def test_unknown_bus_reference_is_named():
    doc = document([1, 2], [gen(1, 1)], [line(1, 1, 99)], {1: [10.0]})
    with pytest.raises(CaseError, match="unknown bus 99"):
        build(doc)


def test_duplicate_generator_id():
    doc = document([1], [gen(1, 1), gen(1, 1)], [], {1: [10.0]})
    with pytest.raises(CaseError, match="duplicate generator id 1"):
        build(doc)


def test_syntax_error_reports_position():
    with pytest.raises(CaseError, match=r"line 2, column \d+"):
        parse_case('{"buses": [\n  {"id": 1,,}]}')


def test_disconnected_network_rejected():
    doc = document([1, 2, 3], [gen(1, 1)], [line(1, 1, 2)], {2: [10.0]})
    with pytest.raises(CaseError, match="connected"):
        build(doc)


def test_bad_rating_names_field():
    doc = document([1, 2], [gen(1, 1)], [line(1, 1, 2, rate=100.0, emergency=50.0)], {2: [10.0]})
    with pytest.raises(CaseError, match="rate_normal"):
        build(doc)


def test_missing_default_penalty():
    doc = one_bus()
    doc["cdr"] = {"cap_fraction": 0.3, "penalty": {}}
    with pytest.raises(CaseError, match="default_penalty"):
        build(doc)


def test_elements_sorted_by_id():
    doc = document([3, 1, 2], [gen(2, 3), gen(1, 1)], [line(2, 2, 3), line(1, 1, 2)], {3: [10.0]})
    case = build(doc)
    assert [b.id for b in case.buses] == [1, 2, 3]
    assert [g.id for g in case.generators] == [1, 2]
    assert [k.id for k in case.lines] == [1, 2]


def test_participating_buses_default_to_load_buses():
    case = triangle()
    assert case.cdr.participating_buses == frozenset({3})


def test_validate_clean_examples():
    for case in (triangle(), random_tiny(0), load_case(rts24_path())):
        assert validate_case(case) == []


def test_capacity_warning():
    doc = document([1], [gen(1, 1, pmax=40.0)], [], {1: [50.0]})
    diags = validate_case(build(doc))
    assert [d.severity for d in diags] == ["warning"]
    assert "p_max" in diags[0].message or "capacity" in diags[0].message


@pytest.mark.parametrize("seed", range(5))
def test_serialize_round_trip_is_idempotent(seed):
    case = random_tiny(seed)
    text = serialize_case(case)
    again = parse_case(text)
    assert again == case
    assert serialize_case(again) == text


def test_scale_identity_and_linear():
    case = triangle((100.0,))
    assert scale_loads(case, 1.0) == case
    assert scale_loads(case, 0.8).demand[2, 0] == pytest.approx(80.0)


@pytest.mark.parametrize("factor", [0.0, -1.0])
def test_scale_rejects_non_positive(factor):
    with pytest.raises(CaseError):
        scale_loads(triangle(), factor)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_scale_composes(a, b):
    case = random_tiny(3)
    np.testing.assert_allclose(scale_loads(scale_loads(case, a), b).demand,
                               scale_loads(case, a * b).demand, rtol=1e-12)


def test_uniform_penalty_overrides_every_bus():
    case = with_uniform_penalty(triangle(penalty=5.0), 123.0)
    assert set(case.cdr.penalty.values()) == {123.0}
    with pytest.raises(CaseError):
        with_uniform_penalty(case, -1.0)


def test_rts_aggregates():
    case = load_case(rts24_path())
    assert (len(case.buses), len(case.generators), len(case.lines)) == (24, 33, 38)
    assert case.total_capacity() == pytest.approx(3393.0)
    assert case.peak_load() == pytest.approx(2281.0, abs=1e-9)
    assert scale_loads(case, 1.2).peak_load() == pytest.approx(2737.2, abs=1e-9)
    assert case.horizon == 24


def test_rts_file_is_plain_json():
    with open(rts24_path()) as fh:
        doc = json.load(fh)
    assert doc["reference_bus"] in {b["id"] for b in doc["buses"]}
