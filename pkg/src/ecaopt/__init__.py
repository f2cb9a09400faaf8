"""Budgeted improvement of landscape connectivity (ECA / PC).

The main entry points are re-exported here; see the submodules for the rest.
"""

from .connectivity import EcaValue, eca, f_all, f_t, pc
from .greedy import decremental_greedy, incremental_greedy, static_decreasing, static_increasing
from .instance import Instance, InstanceError, load_instance, parse_instance, serialize_instance
from .mip import build_bceca_mip, build_model, emit_lp_format, emit_mps_format
from .oracle import budget_sweep, exhaustive_optimum
from .preprocessing import compute_all_sets, reduce_all
from .solution import Solution, evaluate

__all__ = [
    "EcaValue", "eca", "f_all", "f_t", "pc",
    "incremental_greedy", "decremental_greedy", "static_increasing", "static_decreasing",
    "Instance", "InstanceError", "load_instance", "parse_instance", "serialize_instance",
    "build_bceca_mip", "build_model", "emit_lp_format", "emit_mps_format",
    "budget_sweep", "exhaustive_optimum",
    "compute_all_sets", "reduce_all",
    "Solution", "evaluate",
]
