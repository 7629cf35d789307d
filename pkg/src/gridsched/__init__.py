"""Security-constrained unit commitment with corrective demand response."""
from .case_model import CaseError, SystemCase, load_case, parse_case, scale_loads, validate_case
from .experiments import load_scenario_sweep, penalty_sweep, run_variant_comparison, solve_variant
from .formulation import ModelOptions, ModelVariant, assemble_model
from .grid_analysis import build_contingency_set, find_bridges
from .market import compute_lmp, market_summary
from .mini_solver import solve_lp, solve_milp
from .solver_io import export_mps, import_solution
from .verifier import ScheduleSolution, brute_force_optimum, check_solution

__version__ = "0.1.0"


def rts24_path() -> str:
    """Path of the bundled IEEE RTS-24 reconstruction."""
    from importlib.resources import files
    return str(files(__name__) / "data" / "rts24.json")
