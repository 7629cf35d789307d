"""Network topology: radial-line detection and N-1 contingency sets."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .case_model import CaseError, SystemCase, _is_connected

__all__ = [
    "ContingencyKind",
    "Contingency",
    "ContingencySet",
    "find_bridges",
    "build_contingency_set",
]


class ContingencyKind(str, Enum):
    LINE = "line"
    GENERATOR = "generator"

    @property
    def tag(self) -> str:
        return "k" if self is ContingencyKind.LINE else "g"


@dataclass(frozen=True)
class Contingency:
    kind: ContingencyKind
    element_id: int
    probability: float

    @property
    def label(self) -> str:
        """Short name used in variable and row names, e.g. ``k7`` or ``g23``."""
        return f"{self.kind.tag}{self.element_id}"


@dataclass(frozen=True)
class ContingencySet:
    contingencies: tuple[Contingency, ...]
    includes_lines: bool
    includes_generators: bool

    def __len__(self):
        return len(self.contingencies)

    def __iter__(self):
        return iter(self.contingencies)

    def __getitem__(self, i):
        return self.contingencies[i]

    def of_kind(self, kind: ContingencyKind) -> list[int]:
        """Positions of contingencies of the given kind."""
        return [i for i, c in enumerate(self.contingencies) if c.kind is kind]


def find_bridges(case: SystemCase) -> set[int]:
    """Ids of lines whose removal disconnects the bus graph.

    Lowpoint DFS over the multigraph, iterative so deep radial chains do not
    hit the recursion limit.  Parallel circuits are never bridges because the
    DFS skips only the tree edge it arrived on (by line id), not the
    neighbouring bus.
    """
    bus_ids = [b.id for b in case.buses]
    edges = [(k.from_bus, k.to_bus) for k in case.lines]
    if not _is_connected(bus_ids, edges):
        raise CaseError("find_bridges: network is not connected")

    adj: dict[int, list[tuple[int, int]]] = {b: [] for b in bus_ids}
    for k in case.lines:
        adj[k.from_bus].append((k.to_bus, k.id))
        adj[k.to_bus].append((k.from_bus, k.id))

    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    bridges: set[int] = set()
    counter = 0
    root = bus_ids[0]
    disc[root] = low[root] = counter
    # frame: (bus, line id used to enter, iterator position)
    stack = [(root, None, 0)]
    while stack:
        node, via, i = stack[-1]
        if i < len(adj[node]):
            stack[-1] = (node, via, i + 1)
            nb, lid = adj[node][i]
            if lid == via:
                continue
            if nb in disc:
                low[node] = min(low[node], disc[nb])
            else:
                counter += 1
                disc[nb] = low[nb] = counter
                stack.append((nb, lid, 0))
        else:
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[node])
                if low[node] > disc[parent]:
                    bridges.add(via)
    return bridges


def build_contingency_set(case: SystemCase, include_lines: bool = True,
                          include_generators: bool = False) -> ContingencySet:
    """Uniform-probability N-1 set: 1/|non-radial lines| per line, 1/|G| per unit."""
    if not (include_lines or include_generators):
        raise CaseError("at least one contingency kind must be included")
    out: list[Contingency] = []
    if include_lines:
        radial = find_bridges(case)
        candidates = [k.id for k in case.lines if k.id not in radial]
        if not candidates:
            raise CaseError("no non-radial lines: line contingency set is empty")
        p = 1.0 / len(candidates)
        out.extend(Contingency(ContingencyKind.LINE, lid, p) for lid in sorted(candidates))
    if include_generators:
        if not case.generators:
            raise CaseError("no generators: generator contingency set is empty")
        p = 1.0 / len(case.generators)
        out.extend(Contingency(ContingencyKind.GENERATOR, g.id, p) for g in sorted(case.generators, key=lambda g: g.id))
    return ContingencySet(tuple(out), include_lines, include_generators)


def contingencies_csv(cset: ContingencySet) -> str:
    rows = ["kind,element,probability"]
    rows += [f"{c.kind.value},{c.element_id},{c.probability!r}" for c in cset]
    return "\n".join(rows) + "\n"

