"""gridsched command-line entry point.

Exit codes: 0 success, 1 infeasible / failed check, 2 usage or input error,
3 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .case_model import CaseError, load_case, scale_loads, with_uniform_penalty
from .experiments import (
    cdr_totals,
    comparison_csv,
    load_scenario_sweep,
    load_sweep_csv,
    penalty_sweep,
    penalty_sweep_csv,
    run_variant_comparison,
    solve_variant,
)
from .formulation import ModelOptions, ModelVariant, assemble_model, contingencies_for
from .grid_analysis import build_contingency_set, contingencies_csv
from .market import MarketError, compute_lmp, lmp_csv, market_summary
from .solver_io import NameMap, SolutionFileError, export_mps, import_solution
from .verifier import ScheduleSolution, check_solution, schedule_from_vector

log = logging.getLogger("gridsched")

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _variant(text: str) -> ModelVariant:
    try:
        return ModelVariant.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _gap(text: str) -> float:
    g = float(text)
    if g < 0:
        raise argparse.ArgumentTypeError("gap must be >= 0")
    return g


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _options(args) -> ModelOptions:
    return ModelOptions(literal_min_up=args.literal_min_up, enforce_reserve=not args.no_reserve)


def _load(args):
    case = load_case(args.case)
    if getattr(args, "load_factor", None) is not None:
        case = scale_loads(case, args.load_factor)
    if getattr(args, "penalty", None) is not None:
        case = with_uniform_penalty(case, args.penalty)
    return case


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _solution_variant(args, sol: ScheduleSolution) -> ModelVariant:
    if args.variant is not None:
        return args.variant
    if sol.variant is None:
        raise UsageError("solution has no variant; pass --variant")
    return sol.variant


def _report(result) -> str:
    ms = result.milp
    lines = [
        f"variant: {result.variant.label}",
        f"status: {result.status}",
        f"contingencies: {len(result.contingencies)}",
        f"objective: {ms.objective!r}" if result.feasible else "objective: NA",
        f"best_bound: {ms.best_bound!r}",
        f"gap: {ms.achieved_gap!r}",
        f"nodes: {ms.node_count}",
    ]
    if result.feasible and result.variant.uses_cdr:
        line_mw, gen_mw = cdr_totals(result.contingencies, result.schedule)
        lines += [f"cdr_line_mw: {line_mw!r}", f"cdr_gen_mw: {gen_mw!r}"]
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    case = _load(args)
    res = solve_variant(case, args.variant, args.gap, args.time_limit, args.node_limit, _options(args))
    out = Path(args.out)
    _write(out / "report.txt", _report(res))
    print(f"{res.variant.label}: {res.status} ({res.time_s:.2f} s)", file=sys.stderr)
    if not res.feasible:
        return EXIT_INFEASIBLE
    _write(out / "solution.json", res.schedule.to_json(case))
    return EXIT_OK


def cmd_export_mps(args) -> int:
    case = _load(args)
    model = assemble_model(case, contingencies_for(case, args.variant), args.variant, _options(args))
    text, _ = export_mps(model, args.name)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        _write(Path(args.out), text)
    return EXIT_OK


def cmd_import_sol(args) -> int:
    case = _load(args)
    cset = contingencies_for(case, args.variant)
    model = assemble_model(case, cset, args.variant, _options(args))
    res = import_solution(Path(args.solfile).read_text(), NameMap.of(model), model)
    sched = schedule_from_vector(model, case, cset, res.x, res.objective, None, res.status)
    _write(Path(args.out), sched.to_json(case))
    if res.warnings:
        print(f"warning: {res.warnings} variables missing from solution file", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    case = load_case(args.case)
    sol = ScheduleSolution.from_json(Path(args.solution).read_text())
    variant = _solution_variant(args, sol)
    rep = check_solution(case, contingencies_for(case, variant), variant, sol, args.tol, _options(args))
    sys.stdout.write(rep.to_csv())
    if not rep.passed:
        print(f"{len(rep.violations)} violations, max {rep.max_violation:.6g}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_market(args) -> int:
    case = load_case(args.case)
    sol = ScheduleSolution.from_json(Path(args.solution).read_text())
    variant = _solution_variant(args, sol)
    try:
        lmp = compute_lmp(case, contingencies_for(case, variant), variant, sol, _options(args))
    except MarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = Path(args.out)
    _write(out / "lmp.csv", lmp_csv(case, lmp))
    _write(out / "summary.csv", market_summary(case, lmp, sol).summary_csv())
    return EXIT_OK


def cmd_contingencies(args) -> int:
    case = load_case(args.case)
    cset = build_contingency_set(case, include_lines=not args.no_lines, include_generators=args.generators)
    sys.stdout.write(contingencies_csv(cset))
    return EXIT_OK


def cmd_compare(args) -> int:
    case = _load(args)
    rows = run_variant_comparison(case, args.gap, args.time_limit, _options(args))
    _write(Path(args.out) / "comparison.csv", comparison_csv(rows))
    return EXIT_OK


def cmd_sweep_penalty(args) -> int:
    case = _load(args)
    if not args.variant.uses_cdr:
        raise UsageError("sweep-penalty needs a CDR variant")
    rows = penalty_sweep(case, args.penalties, args.variant, args.gap, args.time_limit, _options(args))
    _write(Path(args.out) / "penalty_sweep.csv", penalty_sweep_csv(rows))
    return EXIT_OK


def cmd_sweep_load(args) -> int:
    case = _load(args)
    if any(f <= 0 for f in args.factors):
        raise UsageError("load factors must be positive")
    rows = load_scenario_sweep(case, args.factors, args.variants, args.gap, args.time_limit, _options(args))
    _write(Path(args.out) / "load_sweep.csv", load_sweep_csv(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridsched", description="Security-constrained unit commitment with corrective demand response.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def model_flags(sp, variant_default="tg-scuc-cdr", case_edits=True, variant=True):
        sp.add_argument("case")
        if variant:
            sp.add_argument("--variant", type=_variant,
                            default=_variant(variant_default) if variant_default else None,
                            help="t-scuc, tg-scuc, t-scuc-cdr or tg-scuc-cdr")
        sp.add_argument("--no-reserve", action="store_true", help="drop the spinning-reserve rows")
        sp.add_argument("--literal-min-up", action="store_true",
                        help="apply minimum up-time rows only once a full window fits")
        if case_edits:
            sp.add_argument("--penalty", type=float, help="uniform CDR penalty override ($/MWh)")
            sp.add_argument("--load-factor", type=float, help="scale every load by this factor")

    def solve_flags(sp):
        sp.add_argument("--gap", type=_gap, default=0.01)
        sp.add_argument("--time-limit", type=float, default=None)
        sp.add_argument("--out", default=".")

    sp = sub.add_parser("solve", help="solve one variant and write solution.json and report.txt")
    model_flags(sp)
    solve_flags(sp)
    sp.add_argument("--node-limit", type=int, default=None)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("export-mps", help="write the model in free MPS format")
    model_flags(sp)
    sp.add_argument("--out", default="model.mps", help="output path, '-' for stdout")
    sp.add_argument("--name", default="SCUC")
    sp.set_defaults(func=cmd_export_mps)

    sp = sub.add_parser("import-sol", help="convert an external '<name> <value>' solution to solution.json")
    model_flags(sp)
    sp.add_argument("solfile")
    sp.add_argument("--out", default="solution.json")
    sp.set_defaults(func=cmd_import_sol)

    sp = sub.add_parser("check", help="verify a solution.json; prints violations as CSV")
    model_flags(sp, variant_default=None, case_edits=False)
    sp.add_argument("solution")
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("market", help="LMPs and settlement summary for a solution.json")
    model_flags(sp, variant_default=None, case_edits=False)
    sp.add_argument("solution")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_market)

    sp = sub.add_parser("contingencies", help="print the contingency set as CSV")
    sp.add_argument("case")
    sp.add_argument("--generators", action="store_true", help="include generator outages")
    sp.add_argument("--no-lines", action="store_true", help="exclude line outages")
    sp.set_defaults(func=cmd_contingencies)

    sp = sub.add_parser("compare", help="solve all four variants, write comparison.csv")
    model_flags(sp, variant=False)
    solve_flags(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep-penalty", help="CDR penalty sweep, write penalty_sweep.csv")
    model_flags(sp, case_edits=False)
    sp.add_argument("--load-factor", type=float)
    sp.add_argument("--penalties", type=_floats, default=[0.0, 100.0, 1000.0, 10000.0, 40000.0])
    solve_flags(sp)
    sp.set_defaults(func=cmd_sweep_penalty, penalty=None)

    sp = sub.add_parser("sweep-load", help="load-scaling sweep, write load_sweep.csv")
    model_flags(sp, case_edits=False, variant=False)
    sp.add_argument("--penalty", type=float, help="uniform CDR penalty override ($/MWh)")
    sp.add_argument("--factors", type=_floats, default=[0.8, 0.9, 1.0, 1.1, 1.2])
    sp.add_argument("--variants", type=lambda s: [_variant(x) for x in s.split(",")],
                    default=[ModelVariant.TG_SCUC, ModelVariant.TG_SCUC_CDR])
    solve_flags(sp)
    sp.set_defaults(func=cmd_sweep_load, load_factor=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CaseError, SolutionFileError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort guard maps to the internal-error code
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
