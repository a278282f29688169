"""Optimal content replication for mobile hybrid networks with small base stations."""
from .errors import (CapacityOverflow, InfeasibleInstance, MissingExponents, NoHolder,
                     NonConvergence, NotApplicable, ZeroTotal)
from .params import Allocation, NetworkParams, reference_instance
from .scaling import (classify_regime, compare_strategies, joint_asymptotic_allocation,
                      tradeoff_exponents)
from .solver import (baseline_combination, objective_of, solve_baseline, solve_decoupled,
                     solve_joint)
from .zipf import ZipfModel

__all__ = [
    "Allocation", "NetworkParams", "reference_instance", "ZipfModel",
    "solve_joint", "solve_decoupled", "solve_baseline", "baseline_combination", "objective_of",
    "classify_regime", "compare_strategies", "joint_asymptotic_allocation", "tradeoff_exponents",
    "CapacityOverflow", "InfeasibleInstance", "MissingExponents", "NoHolder", "NonConvergence",
    "NotApplicable", "ZeroTotal",
]
__version__ = "0.1.0"
