"""MILP assembly for the four SCUC variants.

Every constraint row carries a name that starts with its equation tag
(``Eq12_n3_t5``); the tag is what the verifier, the MPS writer and the tests
key on.  Line-flow limits and the CDR cap are kept as explicit rows rather
than folded into variable bounds so each one stays traceable.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .case_model import CaseError, SystemCase
from .grid_analysis import ContingencyKind, ContingencySet, build_contingency_set

__all__ = [
    "ModelVariant",
    "ModelOptions",
    "VariableIndex",
    "MilpModel",
    "index_variables",
    "build_objective",
    "build_base_constraints",
    "build_contingency_constraints",
    "assemble_model",
    "contingencies_for",
]

LE, EQ, GE = "<", "=", ">"
FAMILIES = ("P", "u", "v", "r", "F", "theta", "Pc", "Fc", "thetac", "cdr")


class ModelVariant(str, Enum):
    T_SCUC = "T_SCUC"
    TG_SCUC = "TG_SCUC"
    T_SCUC_CDR = "T_SCUC_CDR"
    TG_SCUC_CDR = "TG_SCUC_CDR"

    @property
    def uses_cdr(self) -> bool:
        return self.value.endswith("_CDR")

    @property
    def with_generators(self) -> bool:
        return self.value.startswith("TG")

    @property
    def counterpart(self) -> "ModelVariant":
        """CDR variant <-> plain variant over the same contingency set."""
        if self.uses_cdr:
            return ModelVariant(self.value[: -len("_CDR")])
        return ModelVariant(self.value + "_CDR")

    @property
    def label(self) -> str:
        return self.value.replace("_", "-")

    @classmethod
    def parse(cls, name: str) -> "ModelVariant":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown variant {name!r}; expected one of "
                             + ", ".join(v.label for v in cls)) from None


@dataclass(frozen=True)
class ModelOptions:
    # Eq8 rows only once a full UT window fits; the default truncates the window at t = 1.
    literal_min_up: bool = False
    # Eq5 reserve rows; a single-unit system cannot satisfy them with positive output.
    enforce_reserve: bool = True


def contingencies_for(case: SystemCase, variant: ModelVariant) -> ContingencySet:
    """Contingency set implied by the variant (K_c, or G_c and K_c)."""
    return build_contingency_set(case, include_lines=True, include_generators=variant.with_generators)


def _check_consistent(cset: ContingencySet, variant: ModelVariant):
    has_gen = any(c.kind is ContingencyKind.GENERATOR for c in cset)
    if has_gen and not variant.with_generators:
        raise CaseError(f"{variant.label} admits line contingencies only")


@dataclass
class VariableIndex:
    """Dense column numbering.  Arrays hold the column of each variable, -1 where absent."""

    P: np.ndarray
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    F: np.ndarray
    theta: np.ndarray
    Pc: np.ndarray
    Fc: np.ndarray
    thetac: np.ndarray
    cdr: np.ndarray
    total_count: int
    keys: list[tuple[str, tuple[int, ...]]] = field(repr=False)

    def key_of(self, col: int) -> tuple[str, tuple[int, ...]]:
        return self.keys[col]

    def column(self, family: str, *subs: int) -> int:
        col = int(getattr(self, family)[subs])
        if col < 0:
            raise KeyError((family, subs))
        return col

    @property
    def binaries(self) -> np.ndarray:
        return np.concatenate([self.u.ravel(), self.v.ravel()])


def index_variables(case: SystemCase, contingencies: ContingencySet, variant: ModelVariant) -> VariableIndex:
    """Assign columns family by family, subscripts in lexicographic order."""
    _check_consistent(contingencies, variant)
    G, K, N, T, C = len(case.generators), len(case.lines), len(case.buses), case.horizon, len(contingencies)
    keys: list[tuple[str, tuple[int, ...]]] = []

    def block(name, shape, mask=None):
        arr = np.full(shape, -1, dtype=np.int64)
        for subs in np.ndindex(*shape):
            if mask is not None and not mask[subs]:
                continue
            arr[subs] = len(keys)
            keys.append((name, subs))
        return arr

    P = block("P", (G, T))
    u = block("u", (G, T))
    v = block("v", (G, T))
    r = block("r", (G, T))
    F = block("F", (K, T))
    theta = block("theta", (N, T))
    Pc = block("Pc", (G, C, T))
    Fc = block("Fc", (K, C, T))
    thetac = block("thetac", (N, C, T))
    if variant.uses_cdr:
        part = np.array([b.id in case.cdr.participating_buses for b in case.buses])
        mask = np.broadcast_to(part[:, None, None], (N, C, T))
    else:
        mask = np.zeros((N, C, T), dtype=bool)
    cdr = block("cdr", (N, C, T), mask)
    return VariableIndex(P, u, v, r, F, theta, Pc, Fc, thetac, cdr, len(keys), keys)


def build_objective(case: SystemCase, contingencies: ContingencySet, index: VariableIndex,
                    variant: ModelVariant) -> np.ndarray:
    """Energy, no-load and start-up cost, plus probability-weighted CDR penalty."""
    c = np.zeros(index.total_count)
    for g, gen in enumerate(case.generators):
        c[index.P[g]] = gen.energy_cost
        c[index.u[g]] = gen.no_load_cost
        c[index.v[g]] = gen.startup_cost
    if variant.uses_cdr:
        for n, bus in enumerate(case.buses):
            for ci, cont in enumerate(contingencies):
                cols = index.cdr[n, ci]
                cols = cols[cols >= 0]
                c[cols] = cont.probability * case.penalty_of(bus.id)
    return c


class _Rows:
    """Accumulates sparse rows in emission order."""

    def __init__(self):
        self.cols: list[list[int]] = []
        self.vals: list[list[float]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def add(self, name: str, terms: list[tuple[int, float]], sense: str, rhs: float):
        merged: dict[int, float] = {}
        for col, val in terms:
            merged[int(col)] = merged.get(int(col), 0.0) + float(val)
        items = [(k, v) for k, v in merged.items() if v != 0.0]
        self.cols.append([k for k, _ in items])
        self.vals.append([v for _, v in items])
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.names.append(name)

    def extend(self, other: "_Rows"):
        self.cols += other.cols
        self.vals += other.vals
        self.senses += other.senses
        self.rhs += other.rhs
        self.names += other.names

    def __len__(self):
        return len(self.names)


def build_base_constraints(case: SystemCase, index: VariableIndex,
                           options: ModelOptions = ModelOptions()) -> _Rows:
    """Unit limits, reserve, ramping, min up/down, start-up logic and the base-case DC network."""
    rows = _Rows()
    T = case.horizon
    d = case.demand
    ix = index
    gens = case.generators

    for g, gen in enumerate(gens):
        tag = f"g{gen.id}"
        u0 = 1.0 if gen.initial_on else 0.0
        p0 = 0.0
        for t in range(T):
            tt = f"{tag}_t{t + 1}"
            P, u, v, r = ix.P[g, t], ix.u[g, t], ix.v[g, t], ix.r[g, t]
            rows.add(f"Eq2_{tt}", [(P, 1), (u, -gen.p_min)], GE, 0)
            rows.add(f"Eq3_{tt}", [(P, 1), (r, 1), (u, -gen.p_max)], LE, 0)
            rows.add(f"Eq4_{tt}", [(r, 1), (u, -gen.ramp_10min)], LE, 0)
            if options.enforce_reserve:
                terms = [(ix.r[q, t], 1) for q in range(len(gens))]
                rows.add(f"Eq5_{tt}", terms + [(P, -1), (r, -1)], GE, 0)
            # ramp limits; t-1 = 0 takes the initial status
            if t == 0:
                rows.add(f"Eq6_{tt}", [(P, 1), (v, -gen.ramp_startup)], LE, gen.ramp_hourly * u0 + p0)
                rows.add(f"Eq7_{tt}", [(P, -1), (u, -gen.ramp_hourly + gen.ramp_shutdown),
                                       (v, -gen.ramp_shutdown)], LE, gen.ramp_shutdown * u0 - p0)
                rows.add(f"Eq10_{tt}", [(v, 1), (u, -1)], GE, -u0)
            else:
                Pp, up = ix.P[g, t - 1], ix.u[g, t - 1]
                rows.add(f"Eq6_{tt}", [(P, 1), (Pp, -1), (up, -gen.ramp_hourly), (v, -gen.ramp_startup)], LE, 0)
                rows.add(f"Eq7_{tt}", [(Pp, 1), (P, -1), (u, -gen.ramp_hourly + gen.ramp_shutdown),
                                       (v, -gen.ramp_shutdown), (up, -gen.ramp_shutdown)], LE, 0)
                rows.add(f"Eq10_{tt}", [(v, 1), (u, -1), (up, 1)], GE, 0)
        for t in range(T):
            if options.literal_min_up and t + 1 < gen.min_up:
                continue
            lo = max(0, t - gen.min_up + 1)
            rows.add(f"Eq8_{tag}_t{t + 1}", [(ix.v[g, q], 1) for q in range(lo, t + 1)] + [(ix.u[g, t], -1)], LE, 0)
        for t in range(T - gen.min_down):
            window = [(ix.v[g, q], 1) for q in range(t + 1, t + 1 + gen.min_down)]
            rows.add(f"Eq9_{tag}_t{t + 1}", window + [(ix.u[g, t], 1)], LE, 1)

    for n, bus in enumerate(case.buses):
        at_bus = case.generators_at(bus.id)
        inflow = [k for k, ln in enumerate(case.lines) if ln.to_bus == bus.id]
        outflow = [k for k, ln in enumerate(case.lines) if ln.from_bus == bus.id]
        for t in range(T):
            terms = [(ix.P[g, t], 1) for g in at_bus]
            terms += [(ix.F[k, t], 1) for k in inflow]
            terms += [(ix.F[k, t], -1) for k in outflow]
            rows.add(f"Eq12_n{bus.id}_t{t + 1}", terms, EQ, d[n, t])

    for k, ln in enumerate(case.lines):
        a, b = case.bus_position(ln.from_bus), case.bus_position(ln.to_bus)
        for t in range(T):
            tt = f"k{ln.id}_t{t + 1}"
            rows.add(f"Eq13_{tt}_lo", [(ix.F[k, t], 1)], GE, -ln.rate_normal)
            rows.add(f"Eq13_{tt}_up", [(ix.F[k, t], 1)], LE, ln.rate_normal)
            rows.add(f"Eq14_{tt}", [(ix.F[k, t], 1), (ix.theta[a, t], -ln.susceptance),
                                    (ix.theta[b, t], ln.susceptance)], EQ, 0)

    ref = case.bus_position(case.reference_bus)
    for t in range(T):
        rows.add(f"Eq15_t{t + 1}", [(ix.theta[ref, t], 1)], EQ, 0)
    return rows


def build_contingency_constraints(case: SystemCase, contingencies: ContingencySet, index: VariableIndex,
                                  variant: ModelVariant) -> _Rows:
    """Post-contingency redispatch, DC flow, emergency limits and nodal balance per contingency."""
    rows = _Rows()
    for ci in range(len(contingencies)):
        rows.extend(_contingency_block(case, contingencies, ci, index, variant))
    return rows


def _contingency_block(case, contingencies, ci, ix, variant) -> _Rows:
    rows = _Rows()
    cont = contingencies[ci]
    lab = cont.label
    T = case.horizon
    d = case.demand
    cap = case.cdr.cap_fraction
    out_gen = cont.element_id if cont.kind is ContingencyKind.GENERATOR else None
    out_line = cont.element_id if cont.kind is ContingencyKind.LINE else None
    live_gens = [g for g, gen in enumerate(case.generators) if gen.id != out_gen]
    live_lines = [k for k, ln in enumerate(case.lines) if ln.id != out_line]

    for g in live_gens:
        gen = case.generators[g]
        for t in range(T):
            tt = f"g{gen.id}_c{lab}_t{t + 1}"
            P, Pc, u = ix.P[g, t], ix.Pc[g, ci, t], ix.u[g, t]
            rows.add(f"Eq16_{tt}", [(P, 1), (Pc, -1), (u, -gen.ramp_10min)], LE, 0)
            rows.add(f"Eq17_{tt}", [(Pc, 1), (P, -1), (u, -gen.ramp_10min)], LE, 0)
            rows.add(f"Eq18_{tt}", [(Pc, 1), (u, -gen.p_min)], GE, 0)
            rows.add(f"Eq19_{tt}", [(Pc, 1), (u, -gen.p_max)], LE, 0)

    for k in live_lines:
        ln = case.lines[k]
        a, b = case.bus_position(ln.from_bus), case.bus_position(ln.to_bus)
        for t in range(T):
            tt = f"k{ln.id}_c{lab}_t{t + 1}"
            Fc = ix.Fc[k, ci, t]
            rows.add(f"Eq20_{tt}", [(Fc, 1), (ix.thetac[a, ci, t], -ln.susceptance),
                                    (ix.thetac[b, ci, t], ln.susceptance)], EQ, 0)
            rows.add(f"Eq21_{tt}_lo", [(Fc, 1)], GE, -ln.rate_emergency)
            rows.add(f"Eq21_{tt}_up", [(Fc, 1)], LE, ln.rate_emergency)

    tag = "Eq23" if variant.uses_cdr else "Eq22"
    for n, bus in enumerate(case.buses):
        at_bus = [g for g in case.generators_at(bus.id) if g in live_gens]
        inflow = [k for k in live_lines if case.lines[k].to_bus == bus.id]
        outflow = [k for k in live_lines if case.lines[k].from_bus == bus.id]
        for t in range(T):
            terms = [(ix.Pc[g, ci, t], 1) for g in at_bus]
            terms += [(ix.Fc[k, ci, t], 1) for k in inflow]
            terms += [(ix.Fc[k, ci, t], -1) for k in outflow]
            col = ix.cdr[n, ci, t]
            if col >= 0:
                terms.append((col, 1))
            rows.add(f"{tag}_n{bus.id}_c{lab}_t{t + 1}", terms, EQ, d[n, t])
            if col >= 0:
                rows.add(f"Eq24_n{bus.id}_c{lab}_t{t + 1}", [(col, 1)], LE, cap * d[n, t])
    return rows


@dataclass(frozen=True, eq=False)
class MilpModel:
    """min c'x  s.t.  A x (sense) rhs,  lower <= x <= upper,  x_j integer where flagged."""

    objective: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray
    row_names: tuple[str, ...]
    index: VariableIndex
    variant: ModelVariant | None = None
    var_names: tuple[str, ...] = ()

    def row_position(self, name: str) -> int:
        lookup = self.__dict__.get("_row_lookup")
        if lookup is None:
            lookup = {nm: i for i, nm in enumerate(self.row_names)}
            object.__setattr__(self, "_row_lookup", lookup)
        return lookup[name]

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def row_tag(self, i: int) -> str:
        return row_equation(self.row_names[i])

    def rows_tagged(self, tag: str) -> list[int]:
        return [i for i, nm in enumerate(self.row_names) if row_equation(nm) == tag]

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "MilpModel":
        return replace(self, lower=lower, upper=upper)

    def fix_commitment(self, u: np.ndarray, v: np.ndarray) -> "MilpModel":
        """Pin every u and v column to the given 0/1 matrices (G x T)."""
        lo, hi = self.lower.copy(), self.upper.copy()
        for arr, vals in ((self.index.u, u), (self.index.v, v)):
            lo[arr.ravel()] = np.asarray(vals, dtype=float).ravel()
            hi[arr.ravel()] = np.asarray(vals, dtype=float).ravel()
        return self.with_bounds(lo, hi)

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x


_TAG = re.compile(r"^(Eq\d+)")


def row_equation(name: str) -> str:
    m = _TAG.match(name)
    if not m:
        raise ValueError(f"row {name!r} carries no equation tag")
    return m.group(1)


def assemble_model(case: SystemCase, contingencies: ContingencySet | None, variant: ModelVariant,
                   options: ModelOptions = ModelOptions()) -> MilpModel:
    """Build the complete MILP for ``variant``; ``contingencies=None`` derives the set from the case."""
    variant = ModelVariant(variant)
    if contingencies is None:
        contingencies = contingencies_for(case, variant)
    ix = index_variables(case, contingencies, variant)
    c = build_objective(case, contingencies, ix, variant)
    rows = build_base_constraints(case, ix, options)
    rows.extend(build_contingency_constraints(case, contingencies, ix, variant))

    n = ix.total_count
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for g, gen in enumerate(case.generators):
        upper[ix.P[g]] = gen.p_max
        upper[ix.u[g]] = 1.0
        upper[ix.v[g]] = 1.0
        upper[ix.Pc[g]] = gen.p_max
    for arr in (ix.F, ix.theta, ix.Fc, ix.thetac):
        lower[arr.ravel()] = -np.inf
    ref = case.bus_position(case.reference_bus)
    for ci, cont in enumerate(contingencies):
        # fix the post-contingency angle reference; flows depend only on differences
        lower[ix.thetac[ref, ci]] = upper[ix.thetac[ref, ci]] = 0.0
        if cont.kind is ContingencyKind.GENERATOR:
            g = case.generator_position(cont.element_id)
            lower[ix.Pc[g, ci]] = upper[ix.Pc[g, ci]] = 0.0
        else:
            k = case.line_position(cont.element_id)
            lower[ix.Fc[k, ci]] = upper[ix.Fc[k, ci]] = 0.0
    integ = np.zeros(n, dtype=bool)
    integ[ix.u.ravel()] = True
    integ[ix.v.ravel()] = True

    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(cs) for cs in rows.cols])
    indices = np.fromiter((j for cs in rows.cols for j in cs), dtype=np.int64, count=int(indptr[-1]))
    data = np.fromiter((a for vs in rows.vals for a in vs), dtype=float, count=int(indptr[-1]))
    A = sp.csr_matrix((data, indices, indptr), shape=(len(rows), n))
    return MilpModel(
        objective=c,
        A=A,
        senses=np.array(rows.senses),
        rhs=np.array(rows.rhs),
        lower=lower,
        upper=upper,
        integrality=integ,
        row_names=tuple(rows.names),
        index=ix,
        variant=variant,
        var_names=tuple(variable_names(case, contingencies, ix)),
    )


def variable_names(case: SystemCase, contingencies: ContingencySet, index: VariableIndex) -> list[str]:
    """MPS-safe column names built from element ids and 1-based hours."""
    gid = [g.id for g in case.generators]
    kid = [k.id for k in case.lines]
    nid = [b.id for b in case.buses]
    lab = [c.label for c in contingencies]
    out = []
    for fam, subs in index.keys:
        if fam in ("P", "u", "v", "r"):
            g, t = subs
            out.append(f"{fam}_g{gid[g]}_t{t + 1}")
        elif fam == "F":
            out.append(f"F_k{kid[subs[0]]}_t{subs[1] + 1}")
        elif fam == "theta":
            out.append(f"th_n{nid[subs[0]]}_t{subs[1] + 1}")
        elif fam == "Pc":
            g, c, t = subs
            out.append(f"P_g{gid[g]}_t{t + 1}_c{lab[c]}")
        elif fam == "Fc":
            k, c, t = subs
            out.append(f"F_k{kid[k]}_t{t + 1}_c{lab[c]}")
        elif fam == "thetac":
            n, c, t = subs
            out.append(f"th_n{nid[n]}_t{t + 1}_c{lab[c]}")
        else:
            n, c, t = subs
            out.append(f"CDR_n{nid[n]}_c{lab[c]}_t{t + 1}")
    return out
