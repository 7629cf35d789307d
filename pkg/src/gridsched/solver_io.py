"""Free-format MPS export and plain-text solution import.

The solution file format is one ``<name> <value>`` pair per line; blank lines
and anything after ``#`` are ignored.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .mini_solver import MilpSolution

log = logging.getLogger(__name__)

__all__ = ["NameMap", "export_mps", "import_solution", "write_solution_file", "SolutionFileError"]

_NAME_RE = re.compile(r"^[A-Za-z0-9_()]{1,255}$")
_SENSE = {"<": "L", ">": "G", "=": "E"}


class SolutionFileError(ValueError):
    pass


@dataclass(frozen=True)
class NameMap:
    var_names: tuple[str, ...]
    row_names: tuple[str, ...]

    def __post_init__(self):
        for kind, names in (("variable", self.var_names), ("row", self.row_names)):
            seen = set()
            for nm in names:
                assert _NAME_RE.match(nm), f"illegal {kind} name {nm!r}"
                assert nm not in seen, f"duplicate {kind} name {nm!r}"
                seen.add(nm)
        object.__setattr__(self, "_col", {nm: i for i, nm in enumerate(self.var_names)})
        object.__setattr__(self, "_row", {nm: i for i, nm in enumerate(self.row_names)})

    def column(self, name: str) -> int:
        return self._col[name]

    def row(self, name: str) -> int:
        return self._row[name]

    @classmethod
    def of(cls, model) -> "NameMap":
        return cls(tuple(model.var_names), tuple(model.row_names))


def _num(x: float) -> str:
    # shortest round-trip representation
    x = float(x)
    if x == 0.0:
        return "0"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def export_mps(model, name: str = "SCUC") -> tuple[str, NameMap]:
    """Serialize ``model`` as free MPS.  Identical models give identical text."""
    names = NameMap.of(model)
    out = [f"NAME {name}", "ROWS", " N  OBJ"]
    out += [f" {_SENSE[s]}  {rn}" for s, rn in zip(model.senses, model.row_names)]

    out.append("COLUMNS")
    A = model.A.tocsc()
    A.sort_indices()
    in_int = False
    marker = 0
    for j, vn in enumerate(model.var_names):
        if bool(model.integrality[j]) != in_int:
            tag = "INTORG" if not in_int else "INTEND"
            out.append(f"    MARKER{marker:04d}  'MARKER'  '{tag}'")
            marker += 1
            in_int = not in_int
        if model.objective[j] != 0.0:
            out.append(f"    {vn}  OBJ  {_num(model.objective[j])}")
        lo, hi = A.indptr[j], A.indptr[j + 1]
        for i, a in zip(A.indices[lo:hi], A.data[lo:hi]):
            out.append(f"    {vn}  {model.row_names[i]}  {_num(a)}")
        if lo == hi and model.objective[j] == 0.0:
            # keep the column declared even when it appears nowhere
            out.append(f"    {vn}  OBJ  0")
    if in_int:
        out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")

    out.append("RHS")
    for rn, b in zip(model.row_names, model.rhs):
        if b != 0.0:
            out.append(f"    RHS  {rn}  {_num(b)}")

    out.append("BOUNDS")
    for j, vn in enumerate(model.var_names):
        lo, hi = model.lower[j], model.upper[j]
        if model.integrality[j] and lo == 0.0 and hi == 1.0:
            out.append(f" BV BND  {vn}")
        elif lo == hi:
            out.append(f" FX BND  {vn}  {_num(lo)}")
        elif np.isneginf(lo) and np.isposinf(hi):
            out.append(f" FR BND  {vn}")
        else:
            if np.isneginf(lo):
                out.append(f" MI BND  {vn}")
            elif lo != 0.0:
                out.append(f" LO BND  {vn}  {_num(lo)}")
            if np.isfinite(hi):
                out.append(f" UP BND  {vn}  {_num(hi)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n", names


def write_solution_file(model, x: np.ndarray) -> str:
    """Render a primal vector in the ``<name> <value>`` format."""
    lines = [f"{vn} {_num(val)}" for vn, val in zip(model.var_names, np.asarray(x, dtype=float))]
    return "\n".join(lines) + "\n"


def import_solution(text: str, names: NameMap, model) -> MilpSolution:
    """Read an external solver's values back into a MilpSolution.

    The objective is recomputed from the model's coefficients; optimality is
    not taken on trust (status is always ``feasible``).  Variables missing
    from the file default to 0 and are counted in ``warnings``.
    """
    x = np.zeros(len(names.var_names))
    seen = np.zeros(len(names.var_names), dtype=bool)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionFileError(f"line {lineno}: expected '<name> <value>', got {raw!r}")
        name, val = parts
        try:
            col = names.column(name)
        except KeyError:
            raise SolutionFileError(f"line {lineno}: unknown variable {name!r}") from None
        try:
            x[col] = float(val)
        except ValueError:
            raise SolutionFileError(f"line {lineno}: bad value {val!r}") from None
        seen[col] = True
    missing = int((~seen).sum())
    if missing:
        log.warning("%d variables missing from solution file; set to 0", missing)
    return MilpSolution("feasible", x, float(np.asarray(model.objective) @ x), achieved_gap=None,
                        warnings=missing)
