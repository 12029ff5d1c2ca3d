"""Explicit integer points whose successive minima follow a prescribed quasi-regular system."""

__version__ = "0.1.0"

from .construction import (
    ConstructionError,
    ConstructionResult,
    GrowthSequence,
    NeedMoreStages,
    direction,
    initial_tuple,
    next_point,
    run,
    stage_certificates,
)
from .estimator import QuasiRegularRealizer
from .interval import HPInterval, Indeterminate
from .minima import (
    BodyFamily,
    BudgetExceeded,
    L_u_certified,
    lambda_point,
    lemma4_sandwich,
    successive_minima_bruteforce,
    trajectory,
    volume,
)
from .systems import MeshSequence, QuasiRegularSystem, breakpoints, has_mesh_at_least, phi_sort
from .verify import VerificationReport, check_proof_eq, corollary_check, theorem_report

__all__ = [
    "BodyFamily",
    "BudgetExceeded",
    "ConstructionError",
    "ConstructionResult",
    "GrowthSequence",
    "HPInterval",
    "Indeterminate",
    "L_u_certified",
    "MeshSequence",
    "NeedMoreStages",
    "QuasiRegularRealizer",
    "QuasiRegularSystem",
    "VerificationReport",
    "breakpoints",
    "check_proof_eq",
    "corollary_check",
    "direction",
    "has_mesh_at_least",
    "initial_tuple",
    "lambda_point",
    "lemma4_sandwich",
    "next_point",
    "phi_sort",
    "run",
    "stage_certificates",
    "successive_minima_bruteforce",
    "theorem_report",
    "trajectory",
    "volume",
]
