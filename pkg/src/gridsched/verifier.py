"""Formulation-independent checking of schedules, and an enumeration oracle.

``check_solution`` re-evaluates every equation with array arithmetic straight
from the case data; it never looks at a :class:`MilpModel`.
``brute_force_optimum`` enumerates commitment patterns and completes each with
an LP solved by HiGHS, so it shares no code with the built-in solver.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .case_model import SystemCase
from .formulation import ModelOptions, ModelVariant, assemble_model
from .grid_analysis import ContingencyKind, ContingencySet

__all__ = [
    "ScheduleSolution",
    "Violation",
    "ViolationReport",
    "check_solution",
    "brute_force_optimum",
    "schedule_from_vector",
    "schedule_to_vector",
    "OracleLimitError",
]

DEFAULT_TOL = 1e-4
BINARY_TOL = 1e-6
OBJ_REL_TOL = 1e-6


@dataclass
class ScheduleSolution:
    """Primal schedule.  Arrays are indexed by position in the case (not by id).

    Shapes: u, v, P, r (G, T); flow (K, T); angle (N, T); Pc (G, C, T);
    Fc (K, C, T); thetac (N, C, T); cdr (N, C, T) or None for non-CDR variants.
    """

    u: np.ndarray
    v: np.ndarray
    P: np.ndarray
    r: np.ndarray
    flow: np.ndarray
    angle: np.ndarray
    Pc: np.ndarray
    Fc: np.ndarray
    thetac: np.ndarray
    cdr: np.ndarray | None
    objective: float
    achieved_gap: float | None = None
    variant: ModelVariant | None = None
    status: str = "feasible"
    contingencies: tuple[str, ...] = ()

    _ARRAYS = ("u", "v", "P", "r", "flow", "angle", "Pc", "Fc", "thetac", "cdr")

    def to_json(self, case: SystemCase) -> str:
        doc = {
            "case": case.name,
            "variant": self.variant.value if self.variant else None,
            "status": self.status,
            "objective": float(self.objective),
            "achieved_gap": None if self.achieved_gap is None else float(self.achieved_gap),
            "generators": [g.id for g in case.generators],
            "lines": [k.id for k in case.lines],
            "buses": [b.id for b in case.buses],
            "contingencies": list(self.contingencies),
        }
        for name in self._ARRAYS:
            arr = getattr(self, name)
            doc[name] = None if arr is None else _clean(arr).tolist()
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScheduleSolution":
        doc = json.loads(text)
        arrays = {k: None if doc.get(k) is None else np.asarray(doc[k], dtype=float) for k in cls._ARRAYS}
        G, T = arrays["u"].shape
        for k in ("Pc", "Fc", "thetac", "cdr"):
            if arrays[k] is not None and arrays[k].size == 0:
                lead = {"Pc": G, "Fc": len(doc.get("lines", [])), "thetac": len(doc.get("buses", [])),
                        "cdr": len(doc.get("buses", []))}[k]
                arrays[k] = arrays[k].reshape(lead, 0, T)
        for k in ("flow",):
            if arrays[k] is not None and arrays[k].size == 0:
                arrays[k] = arrays[k].reshape(0, T)
        variant = ModelVariant(doc["variant"]) if doc.get("variant") else None
        return cls(objective=float(doc["objective"]), achieved_gap=doc.get("achieved_gap"), variant=variant,
                   status=doc.get("status", "feasible"), contingencies=tuple(doc.get("contingencies", [])),
                   **arrays)


def _clean(arr: np.ndarray) -> np.ndarray:
    # negative zero would serialize as "-0.0" and break byte-for-byte determinism
    out = np.asarray(arr, dtype=float) + 0.0
    out[out == 0.0] = 0.0
    return out


def schedule_from_vector(model, case: SystemCase, cset: ContingencySet, x: np.ndarray,
                         objective: float | None = None, achieved_gap: float | None = None,
                         status: str = "feasible") -> ScheduleSolution:
    ix = model.index
    x = np.asarray(x, dtype=float)

    def take(arr):
        out = np.zeros(arr.shape)
        mask = arr >= 0
        out[mask] = x[arr[mask]]
        return out

    cdr = take(ix.cdr) if model.variant is not None and model.variant.uses_cdr else None
    return ScheduleSolution(
        u=take(ix.u), v=take(ix.v), P=take(ix.P), r=take(ix.r), flow=take(ix.F), angle=take(ix.theta),
        Pc=take(ix.Pc), Fc=take(ix.Fc), thetac=take(ix.thetac), cdr=cdr,
        objective=float(model.objective @ x) if objective is None else float(objective),
        achieved_gap=achieved_gap, variant=model.variant, status=status,
        contingencies=tuple(c.label for c in cset),
    )


def schedule_to_vector(model, sol: ScheduleSolution) -> np.ndarray:
    ix = model.index
    x = np.zeros(ix.total_count)
    pairs = [(ix.u, sol.u), (ix.v, sol.v), (ix.P, sol.P), (ix.r, sol.r), (ix.F, sol.flow),
             (ix.theta, sol.angle), (ix.Pc, sol.Pc), (ix.Fc, sol.Fc), (ix.thetac, sol.thetac)]
    if sol.cdr is not None:
        pairs.append((ix.cdr, sol.cdr))
    for cols, vals in pairs:
        mask = cols >= 0
        x[cols[mask]] = np.asarray(vals)[mask]
    return x


@dataclass(frozen=True)
class Violation:
    tag: str
    subscripts: str
    lhs: float
    rhs: float
    slack: float

    @property
    def row_name(self) -> str:
        return f"{self.tag}_{self.subscripts}" if self.subscripts else self.tag


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)
    tolerance: float = DEFAULT_TOL
    objective_recomputed: float = float("nan")

    @property
    def max_violation(self) -> float:
        return max((-v.slack for v in self.violations), default=0.0)

    @property
    def passed(self) -> bool:
        # only entries beyond their own tolerance are ever listed
        return not self.violations

    @property
    def tags(self) -> set[str]:
        return {v.tag for v in self.violations}

    def to_csv(self) -> str:
        lines = ["equation,subscripts,lhs,rhs,slack"]
        lines += [f"{v.tag},{v.subscripts},{v.lhs!r},{v.rhs!r},{v.slack!r}" for v in self.violations]
        return "\n".join(lines) + "\n"


class _Collector:
    def __init__(self, tol):
        self.tol = tol
        self.items: list[Violation] = []

    def le(self, tag, names, lhs, rhs, tol=None):
        self._emit(tag, names, lhs, rhs, np.asarray(rhs) - np.asarray(lhs), tol)

    def ge(self, tag, names, lhs, rhs, tol=None):
        self._emit(tag, names, lhs, rhs, np.asarray(lhs) - np.asarray(rhs), tol)

    def eq(self, tag, names, lhs, rhs, tol=None):
        self._emit(tag, names, lhs, rhs, -np.abs(np.asarray(lhs) - np.asarray(rhs)), tol)

    def _emit(self, tag, names, lhs, rhs, slack, tol):
        tol = self.tol if tol is None else tol
        lhs, rhs, slack = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float), slack)
        for idx in zip(*np.nonzero(slack < -tol)):
            self.items.append(Violation(tag, names(*idx), float(lhs[idx]), float(rhs[idx]), float(slack[idx])))


def _expect_shape(name, arr, shape):
    if arr is None or tuple(np.shape(arr)) != tuple(shape):
        raise ValueError(f"solution field {name} has shape {None if arr is None else np.shape(arr)}, expected {shape}")


def check_solution(case: SystemCase, contingencies: ContingencySet, variant: ModelVariant,
                   solution: ScheduleSolution, tolerance: float = DEFAULT_TOL,
                   options: ModelOptions = ModelOptions()) -> ViolationReport:
    """Re-evaluate the variant's constraints and objective on ``solution``."""
    variant = ModelVariant(variant)
    gens, lines, buses = case.generators, case.lines, case.buses
    G, K, N, T, C = len(gens), len(lines), len(buses), case.horizon, len(contingencies)
    s = solution
    for name, shape in (("u", (G, T)), ("v", (G, T)), ("P", (G, T)), ("r", (G, T)), ("flow", (K, T)),
                        ("angle", (N, T)), ("Pc", (G, C, T)), ("Fc", (K, C, T)), ("thetac", (N, C, T))):
        _expect_shape(name, getattr(s, name), shape)
    if variant.uses_cdr:
        _expect_shape("cdr", s.cdr, (N, C, T))

    gid = [g.id for g in gens]
    kid = [k.id for k in lines]
    nid = [b.id for b in buses]
    labels = [c.label for c in contingencies]
    gt = lambda g, t: f"g{gid[g]}_t{t + 1}"
    kt = lambda k, t: f"k{kid[k]}_t{t + 1}"
    nt = lambda n, t: f"n{nid[n]}_t{t + 1}"

    pmin = np.array([g.p_min for g in gens])[:, None]
    pmax = np.array([g.p_max for g in gens])[:, None]
    r10 = np.array([g.ramp_10min for g in gens])[:, None]
    rhr = np.array([g.ramp_hourly for g in gens])[:, None]
    rsu = np.array([g.ramp_startup for g in gens])[:, None]
    rsd = np.array([g.ramp_shutdown for g in gens])[:, None]
    u0 = np.array([1.0 if g.initial_on else 0.0 for g in gens])[:, None]
    d = case.demand

    out = _Collector(tolerance)
    u, v, P, r = s.u, s.v, s.P, s.r

    out.ge("Eq2", gt, P, pmin * u)
    out.le("Eq3", gt, P + r, pmax * u)
    out.le("Eq4", gt, r, r10 * u)
    out.ge("Eq4", lambda g, t: gt(g, t) + "_lo", r, 0.0)
    if options.enforce_reserve and G:
        out.ge("Eq5", gt, r.sum(axis=0)[None, :] - r, P)
    uprev = np.hstack([u0, u[:, :-1]])
    Pprev = np.hstack([np.zeros((G, 1)), P[:, :-1]])
    out.le("Eq6", gt, P - Pprev, rhr * uprev + rsu * v)
    out.le("Eq7", gt, Pprev - P, rhr * u + rsd * (v - u + uprev))
    csum = np.hstack([np.zeros((G, 1)), np.cumsum(v, axis=1)])
    for g, gen in enumerate(gens):
        t = np.arange(T)
        lo = np.maximum(0, t - gen.min_up + 1)
        window = csum[g, t + 1] - csum[g, lo]
        active = t + 1 >= gen.min_up if options.literal_min_up else np.ones(T, bool)
        out.le("Eq8", lambda i, g=g, t=t[active]: gt(g, t[i]), window[active], u[g, active])
        td = np.arange(max(0, T - gen.min_down))
        if td.size:
            down = csum[g, td + 1 + gen.min_down] - csum[g, td + 1]
            out.le("Eq9", lambda i, g=g: gt(g, i), down, 1.0 - u[g, td])
    out.ge("Eq10", gt, v, u - uprev)
    for name, arr in (("u", u), ("v", v)):
        out.le("Eq11", lambda g, t, name=name: f"{name}_{gt(g, t)}", np.abs(arr - np.round(arr)), 0.0, tol=BINARY_TOL)
        out.le("Eq11", lambda g, t, name=name: f"{name}_{gt(g, t)}_range", np.abs(np.round(arr) - 0.5), 0.5,
               tol=BINARY_TOL)

    # incidence: generator -> bus, line flow counted +1 at receiving bus, -1 at sending bus
    Cg = np.zeros((N, G))
    for g, gen in enumerate(gens):
        Cg[case.bus_position(gen.bus), g] = 1.0
    M = np.zeros((N, K))
    frm = np.array([case.bus_position(k.from_bus) for k in lines], dtype=int)
    to = np.array([case.bus_position(k.to_bus) for k in lines], dtype=int)
    M[to, np.arange(K)] += 1.0
    M[frm, np.arange(K)] -= 1.0
    b = np.array([k.susceptance for k in lines])[:, None]
    rate = np.array([k.rate_normal for k in lines])[:, None]
    emax = np.array([k.rate_emergency for k in lines])[:, None]

    out.eq("Eq12", nt, Cg @ P + M @ s.flow, d)
    out.le("Eq13", lambda k, t: kt(k, t) + "_up", s.flow, rate)
    out.ge("Eq13", lambda k, t: kt(k, t) + "_lo", s.flow, -rate)
    if K:
        out.eq("Eq14", kt, s.flow - b * (s.angle[frm] - s.angle[to]), 0.0)
    ref = case.bus_position(case.reference_bus)
    out.eq("Eq15", lambda t: f"t{t + 1}", s.angle[ref], 0.0)

    cap = case.cdr.cap_fraction
    part = np.array([bb.id in case.cdr.participating_buses for bb in buses])
    for ci, cont in enumerate(contingencies):
        lab = labels[ci]
        gct = lambda g, t, lab=lab: f"g{gid[g]}_c{lab}_t{t + 1}"
        kct = lambda k, t, lab=lab: f"k{kid[k]}_c{lab}_t{t + 1}"
        nct = lambda n, t, lab=lab: f"n{nid[n]}_c{lab}_t{t + 1}"
        live_g = np.ones(G, bool)
        live_k = np.ones(K, bool)
        if cont.kind is ContingencyKind.GENERATOR:
            live_g[gid.index(cont.element_id)] = False
        else:
            live_k[kid.index(cont.element_id)] = False
        Pc, Fc, thc = s.Pc[:, ci], s.Fc[:, ci], s.thetac[:, ci]
        lg = live_g[:, None]
        out.le("Eq16", gct, np.where(lg, P - Pc, 0.0), np.where(lg, r10 * u, 0.0))
        out.le("Eq17", gct, np.where(lg, Pc - P, 0.0), np.where(lg, r10 * u, 0.0))
        out.ge("Eq18", gct, np.where(lg, Pc, 0.0), np.where(lg, pmin * u, 0.0))
        out.le("Eq19", gct, Pc, np.where(lg, pmax * u, 0.0))
        out.ge("Eq19", lambda g, t, f=gct: f(g, t) + "_out", np.where(lg, 0.0, Pc), 0.0)
        lk = live_k[:, None]
        if K:
            out.eq("Eq20", kct, np.where(lk, Fc - b * (thc[frm] - thc[to]), Fc), 0.0)
        out.le("Eq21", lambda k, t, f=kct: f(k, t) + "_up", Fc, emax)
        out.ge("Eq21", lambda k, t, f=kct: f(k, t) + "_lo", Fc, -emax)
        inj = (Cg * live_g[None, :]) @ Pc + (M * live_k[None, :]) @ Fc
        if variant.uses_cdr:
            cdr = s.cdr[:, ci]
            out.eq("Eq23", nct, inj + cdr, d)
            out.le("Eq24", nct, cdr, np.where(part[:, None], cap * d, 0.0))
            out.ge("Eq24", lambda n, t, f=nct: f(n, t) + "_lo", cdr, 0.0)
        else:
            out.eq("Eq22", nct, inj, d)

    obj = _objective(case, contingencies, variant, s)
    rep = ViolationReport(out.items, tolerance, obj)
    if abs(obj - s.objective) > OBJ_REL_TOL * max(1.0, abs(obj)):
        rep.violations.append(Violation("Eq1", "objective", float(s.objective), obj,
                                        -abs(obj - s.objective)))
    rep.violations.sort(key=lambda x: (int(x.tag[2:]), x.subscripts))
    return rep


def _objective(case, contingencies, variant, s) -> float:
    gens = case.generators
    cg = np.array([g.energy_cost for g in gens])
    cnl = np.array([g.no_load_cost for g in gens])
    csu = np.array([g.startup_cost for g in gens])
    total = float(cg @ s.P.sum(axis=1) + cnl @ s.u.sum(axis=1) + csu @ s.v.sum(axis=1))
    if variant.uses_cdr and s.cdr is not None:
        pen = np.array([case.penalty_of(b.id) for b in case.buses])
        prob = np.array([c.probability for c in contingencies])
        total += float(np.einsum("n,c,nct->", pen, prob, s.cdr))
    return total


class OracleLimitError(ValueError):
    """Too many commitment binaries to enumerate."""


def brute_force_optimum(case: SystemCase, contingencies: ContingencySet, variant: ModelVariant,
                        limit: int = 12, options: ModelOptions = ModelOptions()):
    """Proven optimum by enumerating every commitment pattern.

    For each on/off matrix ``u`` the start-ups default to the minimal
    ``v = max(0, u_t - u_{t-1})``; extra start-ups are also tried wherever the
    unit is on in consecutive periods, since they relax the ramp limits.  Each
    pattern is completed by an LP solved with HiGHS.

    Returns ``(objective, ScheduleSolution)``, or ``(None, None)`` when no
    pattern is feasible.
    """
    from scipy.optimize import linprog

    variant = ModelVariant(variant)
    G, T = len(case.generators), case.horizon
    if G * T > limit:
        raise OracleLimitError(f"{G * T} commitment binaries exceed the oracle limit {limit}")
    model = assemble_model(case, contingencies, variant, options)
    A = model.A
    ub_rows = model.senses == "<"
    lb_rows = model.senses == ">"
    eq_rows = model.senses == "="
    A_ub = sp.vstack([A[ub_rows], -A[lb_rows]]).tocsr()
    b_ub = np.concatenate([model.rhs[ub_rows], -model.rhs[lb_rows]])
    A_eq, b_eq = A[eq_rows], model.rhs[eq_rows]
    u0 = np.array([1.0 if g.initial_on else 0.0 for g in case.generators])[:, None]

    best_obj, best_x = None, None
    for bits in itertools.product((0.0, 1.0), repeat=G * T):
        u = np.array(bits).reshape(G, T)
        uprev = np.hstack([u0, u[:, :-1]])
        v_min = np.maximum(0.0, u - uprev)
        extra = np.argwhere((u == 1) & (uprev == 1))
        for flips in itertools.product((0.0, 1.0), repeat=len(extra)):
            v = v_min.copy()
            for (g, t), f in zip(extra, flips):
                v[g, t] = f
            fixed = model.fix_commitment(u, v)
            res = linprog(model.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                          bounds=np.column_stack([fixed.lower, fixed.upper]), method="highs")
            if res.status != 0:
                continue
            if best_obj is None or res.fun < best_obj - 1e-9 * (1 + abs(res.fun)):
                best_obj, best_x = float(res.fun), res.x
    if best_x is None:
        return None, None
    return best_obj, schedule_from_vector(model, case, contingencies, best_x, best_obj, 0.0, "optimal")
