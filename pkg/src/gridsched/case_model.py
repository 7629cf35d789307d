"""Power system instance: buses, generators, lines, hourly load and CDR settings.

Case documents are JSON.  ``parse_case`` returns a validated, immutable
:class:`SystemCase`; ``serialize_case`` writes one back out.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

__all__ = [
    "Bus",
    "Generator",
    "Line",
    "LoadProfile",
    "CdrConfig",
    "SystemCase",
    "Diagnostic",
    "CaseError",
    "parse_case",
    "load_case",
    "serialize_case",
    "scale_loads",
    "validate_case",
]


class CaseError(ValueError):
    """Raised for malformed or invalid case documents."""


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    energy_cost: float        # $/MWh
    no_load_cost: float       # $/h
    startup_cost: float       # $
    p_min: float              # MW
    p_max: float              # MW
    ramp_hourly: float        # MW/h
    ramp_startup: float       # MW
    ramp_shutdown: float      # MW
    ramp_10min: float         # MW
    min_up: int               # h
    min_down: int             # h
    initial_on: bool = False


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    susceptance: float        # MW/rad
    rate_normal: float        # MW
    rate_emergency: float     # MW


@dataclass(frozen=True, eq=False)
class LoadProfile:
    """Nodal demand in MW, rows ordered like ``SystemCase.buses``."""

    demand: np.ndarray

    def __post_init__(self):
        arr = np.array(self.demand, dtype=float, copy=True)
        if arr.ndim != 2:
            raise CaseError("load: demand must be a bus x hour matrix")
        arr.setflags(write=False)
        object.__setattr__(self, "demand", arr)

    @property
    def horizon(self) -> int:
        return self.demand.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LoadProfile):
            return NotImplemented
        return self.demand.shape == other.demand.shape and bool(np.array_equal(self.demand, other.demand))

    def __hash__(self):
        return hash((self.demand.shape, self.demand.tobytes()))


@dataclass(frozen=True)
class CdrConfig:
    penalty: dict[int, float]            # $/MWh per bus id
    cap_fraction: float = 0.3
    participating_buses: frozenset[int] = frozenset()

    def __hash__(self):
        return hash((tuple(sorted(self.penalty.items())), self.cap_fraction, self.participating_buses))


@dataclass(frozen=True)
class SystemCase:
    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...]
    lines: tuple[Line, ...]
    load: LoadProfile
    cdr: CdrConfig
    reference_bus: int
    name: str = "case"
    _bus_pos: dict[int, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_bus_pos", {b.id: i for i, b in enumerate(self.buses)})

    @property
    def horizon(self) -> int:
        return self.load.horizon

    @property
    def demand(self) -> np.ndarray:
        return self.load.demand

    def bus_position(self, bus_id: int) -> int:
        return self._bus_pos[bus_id]

    def generator_position(self, gen_id: int) -> int:
        for i, g in enumerate(self.generators):
            if g.id == gen_id:
                return i
        raise KeyError(gen_id)

    def line_position(self, line_id: int) -> int:
        for i, k in enumerate(self.lines):
            if k.id == line_id:
                return i
        raise KeyError(line_id)

    def generators_at(self, bus_id: int) -> list[int]:
        """Positions of generators connected to ``bus_id``."""
        return [i for i, g in enumerate(self.generators) if g.bus == bus_id]

    def peak_load(self) -> float:
        return float(self.demand.sum(axis=0).max()) if self.demand.size else 0.0

    def total_capacity(self) -> float:
        return float(sum(g.p_max for g in self.generators))

    def penalty_of(self, bus_id: int) -> float:
        return self.cdr.penalty.get(bus_id, 0.0)


@dataclass(frozen=True)
class Diagnostic:
    severity: str   # "error" | "warning"
    field: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.field}: {self.message}"


def validate_case(case: SystemCase) -> list[Diagnostic]:
    """Check every type invariant and cross-reference; one diagnostic per violation."""
    out: list[Diagnostic] = []

    def err(fld, msg):
        out.append(Diagnostic("error", fld, msg))

    bus_ids = [b.id for b in case.buses]
    if not bus_ids:
        err("buses", "at least one bus is required")
    for dup in _duplicates(bus_ids):
        err("buses.id", f"duplicate bus id {dup}")
    for b in case.buses:
        if b.id < 1:
            err("buses.id", f"bus id {b.id} must be >= 1")
    known = set(bus_ids)

    for dup in _duplicates(g.id for g in case.generators):
        err("generators.id", f"duplicate generator id {dup}")
    for g in case.generators:
        where = f"generators[{g.id}]"
        if g.bus not in known:
            err(f"{where}.bus", f"unknown bus {g.bus}")
        if g.p_min < 0:
            err(f"{where}.p_min", "p_min must be >= 0")
        if g.p_min > g.p_max:
            err(f"{where}.p_min", f"p_min {g.p_min} exceeds p_max {g.p_max}")
        for name in ("ramp_hourly", "ramp_startup", "ramp_shutdown", "ramp_10min"):
            if getattr(g, name) < 0:
                err(f"{where}.{name}", f"{name} must be >= 0")
        for name in ("energy_cost", "no_load_cost", "startup_cost"):
            if getattr(g, name) < 0:
                err(f"{where}.{name}", f"{name} must be >= 0")
        if g.min_up < 1:
            err(f"{where}.min_up", "min_up must be >= 1")
        if g.min_down < 1:
            err(f"{where}.min_down", "min_down must be >= 1")

    for dup in _duplicates(k.id for k in case.lines):
        err("lines.id", f"duplicate line id {dup}")
    for k in case.lines:
        where = f"lines[{k.id}]"
        for end in (k.from_bus, k.to_bus):
            if end not in known:
                err(f"{where}", f"unknown bus {end}")
        if k.from_bus == k.to_bus:
            err(f"{where}.to", "line endpoints must differ")
        if not k.susceptance > 0:
            err(f"{where}.susceptance", "susceptance must be > 0")
        if not 0 < k.rate_normal <= k.rate_emergency:
            err(f"{where}.rate_normal", "need 0 < rate_normal <= rate_emergency")

    d = case.demand
    if d.shape[0] != len(case.buses):
        err("load", f"demand has {d.shape[0]} rows for {len(case.buses)} buses")
    if d.shape[1] < 1:
        err("horizon", "horizon must be >= 1")
    if d.size and (not np.all(np.isfinite(d)) or d.min() < 0):
        err("load", "demand entries must be finite and >= 0")

    cdr = case.cdr
    if not 0 <= cdr.cap_fraction <= 1:
        err("cdr.cap_fraction", "cap_fraction must lie in [0, 1]")
    for bid, pen in cdr.penalty.items():
        if bid not in known:
            err("cdr.penalty", f"unknown bus {bid}")
        elif pen < 0:
            err("cdr.penalty", f"penalty at bus {bid} must be >= 0")
    for bid in sorted(cdr.participating_buses):
        if bid not in known:
            err("cdr.participating_buses", f"unknown bus {bid}")

    if case.reference_bus not in known:
        err("reference_bus", f"unknown bus {case.reference_bus}")

    if known and not any(o.severity == "error" and "unknown bus" in o.message for o in out):
        if not _is_connected(bus_ids, [(k.from_bus, k.to_bus) for k in case.lines]):
            err("lines", "network is not connected")

    if d.size and case.total_capacity() < case.peak_load():
        out.append(Diagnostic(
            "warning", "generators",
            f"total capacity {case.total_capacity():g} MW below peak demand {case.peak_load():g} MW",
        ))
    return out


def _duplicates(ids: Iterable[int]) -> list[int]:
    seen, dups = set(), []
    for i in ids:
        if i in seen and i not in dups:
            dups.append(i)
        seen.add(i)
    return dups


def _is_connected(nodes: list[int], edges: list[tuple[int, int]]) -> bool:
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    start = nodes[0]
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(nodes)


# ---------------------------------------------------------------- parsing

_GEN_NUM = ("energy_cost", "no_load_cost", "startup_cost", "p_min", "p_max",
            "ramp_hourly", "ramp_startup", "ramp_shutdown", "ramp_10min")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise CaseError(f"{where}: missing field '{key}'")
    return obj[key]


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise CaseError(f"{where}: value must be finite")
    return float(value)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise CaseError(f"{where}: expected an integer, got {value!r}")
    return value


def parse_case(text: str) -> SystemCase:
    """Parse a JSON case document into a validated SystemCase.

    Raises CaseError on syntax errors (with line/column), dangling bus
    references, duplicate ids or any invariant violation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise CaseError("case document must be a JSON object")

    buses = []
    for i, b in enumerate(_require(doc, "buses", "case")):
        bid = _int(_require(b, "id", f"buses[{i}]"), f"buses[{i}].id")
        buses.append(Bus(bid, str(b.get("name", f"bus{bid}"))))
    ids = [b.id for b in buses]
    for dup in _duplicates(ids):
        raise CaseError(f"buses.id: duplicate bus id {dup}")
    known = set(ids)
    buses.sort(key=lambda b: b.id)

    def bus_ref(value, where):
        bid = _int(value, where)
        if bid not in known:
            raise CaseError(f"{where}: unknown bus {bid}")
        return bid

    gens = []
    for i, g in enumerate(doc.get("generators", [])):
        where = f"generators[{i}]"
        kw = {k: _num(_require(g, k, where), f"{where}.{k}") for k in _GEN_NUM}
        init = g.get("initial_on", False)
        if not isinstance(init, bool):
            raise CaseError(f"{where}.initial_on: expected a boolean")
        gens.append(Generator(
            id=_int(_require(g, "id", where), f"{where}.id"),
            bus=bus_ref(_require(g, "bus", where), f"{where}.bus"),
            min_up=_int(_require(g, "min_up", where), f"{where}.min_up"),
            min_down=_int(_require(g, "min_down", where), f"{where}.min_down"),
            initial_on=init,
            **kw,
        ))
    for dup in _duplicates(g.id for g in gens):
        raise CaseError(f"generators.id: duplicate generator id {dup}")
    gens.sort(key=lambda g: g.id)

    lines = []
    for i, k in enumerate(doc.get("lines", [])):
        where = f"lines[{i}]"
        lines.append(Line(
            id=_int(_require(k, "id", where), f"{where}.id"),
            from_bus=bus_ref(_require(k, "from", where), f"{where}.from"),
            to_bus=bus_ref(_require(k, "to", where), f"{where}.to"),
            susceptance=_num(_require(k, "susceptance", where), f"{where}.susceptance"),
            rate_normal=_num(_require(k, "rate_normal", where), f"{where}.rate_normal"),
            rate_emergency=_num(_require(k, "rate_emergency", where), f"{where}.rate_emergency"),
        ))
    for dup in _duplicates(k.id for k in lines):
        raise CaseError(f"lines.id: duplicate line id {dup}")
    lines.sort(key=lambda k: k.id)

    horizon = _int(_require(doc, "horizon", "case"), "horizon")
    if horizon < 1:
        raise CaseError("horizon: must be >= 1")
    pos = {b.id: i for i, b in enumerate(buses)}
    demand = np.zeros((len(buses), horizon))
    load = doc.get("load", {})
    if not isinstance(load, dict):
        raise CaseError("load: expected an object keyed by bus id")
    for key, series in load.items():
        bid = bus_ref(_bus_key(key, "load"), f"load[{key}]")
        if not isinstance(series, list) or len(series) != horizon:
            raise CaseError(f"load[{key}]: expected {horizon} values")
        demand[pos[bid]] = [_num(v, f"load[{key}]") for v in series]

    cdr_doc = doc.get("cdr", {})
    pen_doc = cdr_doc.get("penalty", {})
    penalty = {}
    for key, val in pen_doc.items():
        bid = bus_ref(_bus_key(key, "cdr.penalty"), f"cdr.penalty[{key}]")
        penalty[bid] = _num(val, f"cdr.penalty[{key}]")
    missing = [b for b in ids if b not in penalty]
    if missing:
        if "default_penalty" in cdr_doc:
            default = _num(cdr_doc["default_penalty"], "cdr.default_penalty")
        elif not cdr_doc:
            default = 0.0
        else:
            raise CaseError(f"cdr.default_penalty: required because bus {missing[0]} has no penalty")
        for b in missing:
            penalty[b] = default
    if "participating_buses" in cdr_doc:
        part = frozenset(bus_ref(b, "cdr.participating_buses") for b in cdr_doc["participating_buses"])
    else:
        part = frozenset(b.id for b, row in zip(buses, demand) if row.any())
    cdr = CdrConfig(
        penalty=dict(sorted(penalty.items())),
        cap_fraction=_num(cdr_doc.get("cap_fraction", 0.3), "cdr.cap_fraction"),
        participating_buses=part,
    )

    case = SystemCase(
        buses=tuple(buses),
        generators=tuple(gens),
        lines=tuple(lines),
        load=LoadProfile(demand),
        cdr=cdr,
        reference_bus=bus_ref(_require(doc, "reference_bus", "case"), "reference_bus"),
        name=str(doc.get("name", "case")),
    )
    errors = [d for d in validate_case(case) if d.severity == "error"]
    if errors:
        raise CaseError(str(errors[0]))
    return case


def _bus_key(key: str, where: str) -> int:
    try:
        return int(key)
    except ValueError:
        raise CaseError(f"{where}: bus key {key!r} is not an integer") from None


def load_case(path: str | Path) -> SystemCase:
    return parse_case(Path(path).read_text(encoding="utf-8"))


def case_to_dict(case: SystemCase) -> dict:
    return {
        "name": case.name,
        "reference_bus": case.reference_bus,
        "horizon": case.horizon,
        "buses": [{"id": b.id, "name": b.name} for b in case.buses],
        "generators": [
            {
                "id": g.id, "bus": g.bus,
                **{k: getattr(g, k) for k in _GEN_NUM},
                "min_up": g.min_up, "min_down": g.min_down, "initial_on": g.initial_on,
            }
            for g in case.generators
        ],
        "lines": [
            {
                "id": k.id, "from": k.from_bus, "to": k.to_bus, "susceptance": k.susceptance,
                "rate_normal": k.rate_normal, "rate_emergency": k.rate_emergency,
            }
            for k in case.lines
        ],
        "load": {str(b.id): [float(x) for x in row] for b, row in zip(case.buses, case.demand)},
        "cdr": {
            "cap_fraction": case.cdr.cap_fraction,
            "penalty": {str(b): p for b, p in sorted(case.cdr.penalty.items())},
            "participating_buses": sorted(case.cdr.participating_buses),
        },
    }


def serialize_case(case: SystemCase) -> str:
    return json.dumps(case_to_dict(case), indent=1) + "\n"


def scale_loads(case: SystemCase, factor: float) -> SystemCase:
    """Return a copy of ``case`` with every nodal demand multiplied by ``factor``."""
    if not factor > 0:
        raise CaseError(f"load factor must be > 0, got {factor}")
    return replace(case, load=LoadProfile(case.demand * factor))


def with_uniform_penalty(case: SystemCase, penalty: float) -> SystemCase:
    """Override every bus's CDR penalty with one value."""
    if penalty < 0:
        raise CaseError("penalty must be >= 0")
    cdr = replace(case.cdr, penalty={b.id: float(penalty) for b in case.buses})
    return replace(case, cdr=cdr)
