from collections import deque

import pytest

from cases import build, document, gen, line, triangle
from gridsched import rts24_path
from gridsched.case_model import CaseError, load_case
from gridsched.grid_analysis import (
    ContingencyKind,
    build_contingency_set,
    contingencies_csv,
    find_bridges,
)


def connected_without(case, skip_id):
    """Reference check: drop one line and BFS from the first bus."""
    adj = {b.id: [] for b in case.buses}
    for k in case.lines:
        if k.id != skip_id:
            adj[k.from_bus].append(k.to_bus)
            adj[k.to_bus].append(k.from_bus)
    start = case.buses[0].id
    seen, todo = {start}, deque([start])
    while todo:
        for nb in adj[todo.popleft()]:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return len(seen) == len(case.buses)


def brute_bridges(case):
    return {k.id for k in case.lines if not connected_without(case, k.id)}


def path_case():
    return build(document([1, 2, 3], [gen(1, 1)], [line(1, 1, 2), line(2, 2, 3)], {3: [10.0]}))


def test_triangle_has_no_bridges():
    assert find_bridges(triangle()) == set()


def test_path_lines_are_all_bridges():
    assert find_bridges(path_case()) == {1, 2}


def test_parallel_circuits_are_not_bridges():
    case = build(document([1, 2, 3], [gen(1, 1)],
                          [line(1, 1, 2), line(2, 1, 2), line(3, 2, 3)], {3: [10.0]}))
    assert find_bridges(case) == {3}


def test_rts_bridges_match_delete_and_search():
    case = load_case(rts24_path())
    assert find_bridges(case) == brute_bridges(case)


def test_line_contingency_probabilities():
    cset = build_contingency_set(triangle())
    assert [c.element_id for c in cset] == [1, 2, 3]
    assert all(c.probability == pytest.approx(1 / 3) for c in cset)


def test_rts_both_flags():
    case = load_case(rts24_path())
    n_lines = len(case.lines) - len(brute_bridges(case))
    cset = build_contingency_set(case, include_lines=True, include_generators=True)
    lines = [cset[i] for i in cset.of_kind(ContingencyKind.LINE)]
    gens = [cset[i] for i in cset.of_kind(ContingencyKind.GENERATOR)]
    assert len(lines) == n_lines and len(gens) == 33
    assert all(c.probability == pytest.approx(1 / n_lines) for c in lines)
    assert all(c.probability == pytest.approx(1 / 33) for c in gens)
    # line outages come first, then generators, both in id order
    assert list(cset)[:n_lines] == lines


def test_contingency_set_is_deterministic():
    case = load_case(rts24_path())
    a = build_contingency_set(case, True, True)
    b = build_contingency_set(case, True, True)
    assert contingencies_csv(a) == contingencies_csv(b)


def test_no_non_radial_lines_is_an_error():
    with pytest.raises(CaseError):
        build_contingency_set(path_case(), include_lines=True, include_generators=False)


def test_neither_flag_is_an_error():
    with pytest.raises(ValueError):
        build_contingency_set(triangle(), include_lines=False, include_generators=False)


def test_csv_layout():
    text = contingencies_csv(build_contingency_set(triangle(), True, True))
    rows = text.strip().splitlines()
    assert rows[0] == "kind,element,probability"
    assert rows[1].startswith("line,1,")
    assert rows[-1].startswith("generator,2,")
