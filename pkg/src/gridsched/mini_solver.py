"""Small exact solver: bounded-variable revised simplex plus best-first branch and bound.

Sized for desk-scale instances (a few hundred rows).  The basis inverse is kept
dense and updated with product-form pivots, with a full refactorization every
``REFACTOR_EVERY`` pivots.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

__all__ = ["LpSolution", "MilpSolution", "solve_lp", "solve_milp", "NumericalError"]

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 50
STALL_LIMIT = 30

AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, 3


class NumericalError(RuntimeError):
    """The basis became singular and could not be repaired."""


@dataclass
class LpSolution:
    status: str                      # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    duals: np.ndarray | None = None  # d objective / d rhs, one per row
    reduced_costs: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    warm_start: object = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class MilpSolution:
    status: str                      # optimal | feasible | infeasible | gap_limit | unknown
    x: np.ndarray | None = None
    objective: float = float("nan")
    best_bound: float = float("nan")
    achieved_gap: float | None = None
    node_count: int = 0
    warnings: int = 0

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def _standard_form(model):
    """Append one slack per row so that A x + s = b; slack bounds encode the row sense."""
    A = model.A.toarray() if hasattr(model.A, "toarray") else np.asarray(model.A, dtype=float)
    m, n = A.shape
    s_lo = np.where(model.senses == ">", -np.inf, 0.0)
    s_hi = np.where(model.senses == "<", np.inf, 0.0)
    return A, m, n, s_lo, s_hi


class _Simplex:
    """Columns are laid out as [structurals | slacks (identity) | artificials (diag(sign))]."""

    def __init__(self, A, n, sign, b, lo, hi):
        self.A = A
        self.n = n
        self.sign = sign
        self.b = b
        self.lo = lo
        self.hi = hi
        self.m, self.ncol = A.shape
        self.As = A[:, :n]
        self.iterations = 0

    def _reduced_costs(self, cost, y):
        n, m = self.n, self.m
        d = np.empty(self.ncol)
        d[:n] = cost[:n] - y @ self.As
        d[n:n + m] = cost[n:n + m] - y
        d[n + m:] = cost[n + m:] - self.sign * y
        return d

    since_refactor = 0

    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise NumericalError("singular basis") from None
        if not np.all(np.isfinite(self.Binv)):
            raise NumericalError("singular basis")
        nb = self.state != BASIC
        self.x[self.basis] = self.Binv @ (self.b - self.A[:, nb] @ self.x[nb])
        self.since_refactor = 0

    def run(self, cost, max_iter):
        """Primal simplex from the current basis.  Returns 'optimal' or 'unbounded'."""
        stall = 0
        last_obj = np.inf
        bland = False
        for _ in range(max_iter):
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()
            y = cost[self.basis] @ self.Binv
            d = self._reduced_costs(cost, y)
            st = self.state
            inc = (d < -OPT_TOL) & (self.x < self.hi - FEAS_TOL) & (st != BASIC)
            dec = (d > OPT_TOL) & (self.x > self.lo + FEAS_TOL) & (st != BASIC)
            cand = np.flatnonzero(inc | dec)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if inc[j] else -1.0
            alpha = self.Binv @ self.A[:, j]
            # basic variables move by -direction * theta * alpha
            step = direction * alpha
            xb = self.x[self.basis]
            lb, ub = self.lo[self.basis], self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_dec = np.where(step > PIVOT_TOL, (xb - lb) / step, np.inf)
                t_inc = np.where(step < -PIVOT_TOL, (ub - xb) / -step, np.inf)
            ratios = np.maximum(np.minimum(t_dec, t_inc), 0.0)
            theta_flip = self.hi[j] - self.lo[j]
            r = -1
            theta = np.inf
            if ratios.size:
                tmin = ratios.min()
                if np.isfinite(tmin):
                    ties = np.flatnonzero(ratios <= tmin + 1e-12)
                    if bland:
                        r = int(ties[np.argmin(self.basis[ties])])
                    else:
                        r = int(ties[np.argmax(np.abs(step[ties]))])
                    theta = float(ratios[r])
            if theta_flip <= theta:
                if not np.isfinite(theta_flip):
                    return "unbounded"
                # bound flip, basis unchanged
                self.x[j] += direction * theta_flip
                self.x[self.basis] -= theta_flip * step
                self.state[j] = AT_UPPER if direction > 0 else AT_LOWER
            else:
                self.x[j] += direction * theta
                self.x[self.basis] -= theta * step
                leave = self.basis[r]
                self.state[leave] = AT_LOWER if t_dec[r] <= t_inc[r] else AT_UPPER
                self.x[leave] = self.lo[leave] if self.state[leave] == AT_LOWER else self.hi[leave]
                self.basis[r] = j
                self.state[j] = BASIC
                piv = alpha[r]
                if abs(piv) < PIVOT_TOL:
                    raise NumericalError("pivot too small")
                row = self.Binv[r] / piv
                self.Binv -= np.outer(alpha, row)
                self.Binv[r] = row
                self.since_refactor += 1
            self.iterations += 1
            obj = float(cost @ self.x)
            if obj < last_obj - 1e-12 * (1 + abs(obj)):
                last_obj = obj
                stall = 0
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True
        raise NumericalError("iteration limit reached")

    def run_dual(self, cost, max_iter):
        """Dual simplex from a dual-feasible basis.

        Returns 'optimal', 'infeasible', or 'lost' when the start is not dual
        feasible (the caller then solves from scratch).
        """
        y = cost[self.basis] @ self.Binv
        d = self._reduced_costs(cost, y)
        nb = self.state != BASIC
        free = self.lo < self.hi - FEAS_TOL
        bad = nb & free & (((self.state == AT_LOWER) & (d < -OPT_TOL)) | ((self.state == AT_UPPER) & (d > OPT_TOL))
                           | ((self.state == AT_ZERO) & (np.abs(d) > OPT_TOL)))
        if bad.any():
            return "lost"
        stall = 0
        for _ in range(max_iter):
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()
            xb = self.x[self.basis]
            lb, ub = self.lo[self.basis], self.hi[self.basis]
            below = lb - xb
            above = xb - ub
            viol = np.maximum(below, above)
            tol = FEAS_TOL * (1.0 + np.abs(xb))
            if not np.any(viol > tol):
                return "optimal"
            if stall > STALL_LIMIT:
                r = int(np.flatnonzero(viol > tol)[np.argmin(self.basis[viol > tol])])
            else:
                r = int(np.argmax(np.where(viol > tol, viol, -np.inf)))
            to_lower = below[r] > 0
            rho = self.Binv[r]
            y = cost[self.basis] @ self.Binv
            d = self._reduced_costs(cost, y)
            alpha_r = np.empty(self.ncol)
            alpha_r[:self.n] = rho @ self.As
            alpha_r[self.n:self.n + self.m] = rho
            alpha_r[self.n + self.m:] = rho * self.sign
            st = self.state
            movable_up = (st != BASIC) & (self.x < self.hi - FEAS_TOL)
            movable_dn = (st != BASIC) & (self.x > self.lo + FEAS_TOL)
            if to_lower:
                elig = (movable_up & (alpha_r < -PIVOT_TOL)) | (movable_dn & (alpha_r > PIVOT_TOL))
            else:
                elig = (movable_up & (alpha_r > PIVOT_TOL)) | (movable_dn & (alpha_r < -PIVOT_TOL))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "infeasible"
            ratios = np.abs(d[cand]) / np.abs(alpha_r[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12]
            j = int(ties[0]) if stall > STALL_LIMIT else int(ties[np.argmax(np.abs(alpha_r[ties]))])
            alpha = self.Binv @ self.A[:, j]
            target = lb[r] if to_lower else ub[r]
            delta = (xb[r] - target) / alpha[r]
            self.x[j] += delta
            self.x[self.basis] -= delta * alpha
            leave = self.basis[r]
            self.x[leave] = target
            self.state[leave] = AT_LOWER if to_lower else AT_UPPER
            self.basis[r] = j
            self.state[j] = BASIC
            row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, row)
            self.Binv[r] = row
            self.since_refactor += 1
            self.iterations += 1
            stall = stall + 1 if best <= 1e-12 else 0
        raise NumericalError("iteration limit reached")


@dataclass
class _WarmStart:
    """Final basis of a phase-2 solve, reusable after bound changes on structurals."""

    full: np.ndarray
    sign: np.ndarray
    basis: np.ndarray
    state: np.ndarray


def solve_lp(model, lower=None, upper=None, max_iter: int = 50_000, warm_start=None) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality ignored).

    ``lower``/``upper`` override the model's variable bounds, which is how
    branch and bound and fixed-commitment pricing call it.  Duals are the
    sensitivities of the optimal objective to each row's right-hand side.
    A ``warm_start`` taken from a previous solution of the same model is
    re-optimized with the dual simplex; on any trouble it falls back to a
    cold two-phase solve.
    """
    lo = np.asarray(model.lower if lower is None else lower, dtype=float)
    hi = np.asarray(model.upper if upper is None else upper, dtype=float)
    if np.any(lo > hi + FEAS_TOL):
        return LpSolution("infeasible")
    if warm_start is not None:
        try:
            sol = _solve_warm(model, lo, hi, warm_start, max_iter)
        except NumericalError:
            sol = None
        if sol is not None:
            return sol
    return _solve_cold(model, lo, hi, max_iter)


def _finish(model, sx, cost):
    n, m = sx.n, sx.m
    sx._refactor()
    x = sx.x[:n].copy()
    y = cost[sx.basis] @ sx.Binv
    rc = np.asarray(model.objective, dtype=float) - y @ sx.As
    sol = LpSolution(
        status="optimal",
        x=x,
        duals=y,
        reduced_costs=rc,
        objective=float(np.asarray(model.objective) @ x),
        iterations=sx.iterations,
    )
    sol.warm_start = _WarmStart(sx.A, sx.sign, sx.basis.copy(), sx.state.copy())
    return sol


def _solve_cold(model, lo, hi, max_iter):
    A, m, n, s_lo, s_hi = _standard_form(model)
    b = np.asarray(model.rhs, dtype=float)

    # structurals and slacks start nonbasic at a finite bound, or at zero when free
    lo_all = np.concatenate([lo, s_lo])
    hi_all = np.concatenate([hi, s_hi])
    x0 = np.where(np.isfinite(lo_all), lo_all, np.where(np.isfinite(hi_all), hi_all, 0.0))
    state0 = np.where(np.isfinite(lo_all), AT_LOWER, np.where(np.isfinite(hi_all), AT_UPPER, AT_ZERO))
    AS = np.hstack([A, np.eye(m)])
    resid = b - AS @ x0
    # crash basis: a slack is basic wherever it can absorb the residual within its
    # bounds; the remaining rows get an artificial with coefficient sign(residual)
    slack_ok = (resid >= s_lo - FEAS_TOL) & (resid <= s_hi + FEAS_TOL) & (np.isfinite(s_lo) | np.isfinite(s_hi))
    slack_ok &= ~((s_lo == 0.0) & (s_hi == 0.0))
    sign = np.where(resid >= 0, 1.0, -1.0)
    full = np.hstack([AS, np.diag(sign)])
    lo_f = np.concatenate([lo_all, np.zeros(m)])
    hi_f = np.concatenate([hi_all, np.where(slack_ok, 0.0, np.inf)])
    x = np.concatenate([x0, np.where(slack_ok, 0.0, np.abs(resid))])
    x[n:n + m] = np.where(slack_ok, resid, x0[n:n + m])
    state = np.concatenate([state0, np.full(m, AT_LOWER)])
    basis = np.where(slack_ok, n + np.arange(m), n + m + np.arange(m))
    state[basis] = BASIC

    sx = _Simplex(full, n, sign, b, lo_f, hi_f)
    sx.x = x
    sx.state = state
    sx.basis = basis
    sx.Binv = np.diag(np.where(slack_ok, 1.0, sign))
    sx.since_refactor = 0

    art = slice(n + m, n + 2 * m)
    phase1 = np.zeros(n + 2 * m)
    phase1[art] = 1.0
    sx.run(phase1, max_iter)
    sx._refactor()
    infeas = float(np.sum(sx.x[art]))
    scale = 1.0 + float(np.abs(b).max(initial=0.0))
    if infeas > FEAS_TOL * scale * max(1, m) ** 0.5:
        return LpSolution("infeasible", iterations=sx.iterations)

    # artificials stay in the problem pinned at zero
    sx.hi[art] = 0.0
    nb_art = np.flatnonzero(sx.state[art] != BASIC) + n + m
    sx.x[nb_art] = 0.0
    sx.state[nb_art] = AT_LOWER
    cost = np.concatenate([np.asarray(model.objective, dtype=float), np.zeros(2 * m)])
    status = sx.run(cost, max_iter)
    if status == "unbounded":
        return LpSolution("unbounded", iterations=sx.iterations)
    return _finish(model, sx, cost)


def _solve_warm(model, lo, hi, ws: _WarmStart, max_iter):
    m, n = model.A.shape
    if ws.full.shape != (m, n + 2 * m):
        return None
    s_lo = np.where(model.senses == ">", -np.inf, 0.0)
    s_hi = np.where(model.senses == "<", np.inf, 0.0)
    lo_f = np.concatenate([lo, s_lo, np.zeros(m)])
    hi_f = np.concatenate([hi, s_hi, np.zeros(m)])
    state = ws.state.copy()
    x = np.where(state == AT_UPPER, hi_f, np.where(state == AT_ZERO, 0.0, lo_f))
    if not np.all(np.isfinite(x[state != BASIC])):
        return None
    sx = _Simplex(ws.full, n, ws.sign, np.asarray(model.rhs, dtype=float), lo_f, hi_f)
    sx.x = x
    sx.state = state
    sx.basis = ws.basis.copy()
    sx._refactor()
    cost = np.concatenate([np.asarray(model.objective, dtype=float), np.zeros(2 * m)])
    status = sx.run_dual(cost, max_iter)
    if status == "infeasible":
        return LpSolution("infeasible", iterations=sx.iterations)
    if status != "optimal":
        return None
    if sx.run(cost, max_iter) != "optimal":
        return None
    return _finish(model, sx, cost)


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    x: np.ndarray = field(compare=False)
    warm: object = field(compare=False, default=None)


def _gap(incumbent, bound):
    return max(0.0, (incumbent - bound) / max(abs(incumbent), 1e-9))


def solve_milp(model, gap_target: float = 0.0, time_limit: float | None = None,
               node_limit: int | None = None) -> MilpSolution:
    """Best-first branch and bound on the integer columns of ``model``.

    Branches on the most fractional variable (lowest index on ties); nodes are
    explored in order of LP bound, then creation order.
    """
    if gap_target < 0:
        raise ValueError("gap_target must be >= 0")
    start = time.monotonic()
    integ = np.flatnonzero(model.integrality)
    root = solve_lp(model)
    if root.status == "infeasible":
        return MilpSolution("infeasible", node_count=1)
    if root.status == "unbounded":
        raise ValueError("LP relaxation is unbounded")

    counter = itertools.count()
    heap = [_Node(root.objective, next(counter), model.lower.copy(), model.upper.copy(), root.x, root.warm_start)]
    best_x, best_obj = None, np.inf
    nodes = 1
    limited = False
    while heap:
        bound = heap[0].bound
        if best_x is not None:
            if bound >= best_obj - 1e-9 * (1 + abs(best_obj)) or _gap(best_obj, bound) <= gap_target:
                break
        if (time_limit is not None and time.monotonic() - start > time_limit) or \
                (node_limit is not None and nodes >= node_limit):
            limited = True
            break
        node = heapq.heappop(heap)
        if best_x is not None and node.bound >= best_obj - 1e-9 * (1 + abs(best_obj)):
            continue
        frac = np.abs(node.x[integ] - np.round(node.x[integ]))
        if integ.size == 0 or frac.max() <= INT_TOL:
            xr = node.x.copy()
            xr[integ] = np.round(xr[integ])
            if node.bound < best_obj:
                best_x, best_obj = xr, node.bound
            continue
        # most fractional; argmin returns the lowest index among ties
        score = np.abs(frac - 0.5)
        j = int(integ[np.argmin(score)])
        val = node.x[j]
        for lo_j, hi_j in ((node.lower[j], np.floor(val)), (np.ceil(val), node.upper[j])):
            lo, hi = node.lower.copy(), node.upper.copy()
            lo[j], hi[j] = lo_j, hi_j
            child = solve_lp(model, lo, hi, warm_start=node.warm)
            nodes += 1
            if child.status != "optimal":
                continue
            if best_x is not None and child.objective >= best_obj - 1e-9 * (1 + abs(best_obj)):
                continue
            heapq.heappush(heap, _Node(child.objective, next(counter), lo, hi, child.x, child.warm_start))

    if best_x is None:
        if limited:
            return MilpSolution("unknown", node_count=nodes)
        return MilpSolution("infeasible", node_count=nodes)
    best_bound = min([best_obj] + [nd.bound for nd in heap])
    gap = _gap(best_obj, best_bound)
    if not heap or gap <= 1e-9:
        status = "optimal"
    elif gap <= gap_target:
        status = "gap_limit"
    else:
        status = "feasible"
    obj = float(np.asarray(model.objective) @ best_x)
    return MilpSolution(status, best_x, obj, float(best_bound), gap, nodes)
