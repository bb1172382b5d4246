"""Active preference learning and constraint-aware placement for a toy fridge."""

from .belief import LearnerConfig, run_active_learning
from .benchgen import generate_case, generate_dataset
from .catalog import DEFAULT_CATALOG, Category, GeneralLocation, SpecificLocation
from .planner import PlannerConfig, plan_with_refinement
from .preference import Preference, admissible_locations
from .reward import Demonstration, reward
from .world2d import Action, FridgeGeometry, FridgeState, Plan, constraint

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Category",
    "DEFAULT_CATALOG",
    "Demonstration",
    "FridgeGeometry",
    "FridgeState",
    "GeneralLocation",
    "LearnerConfig",
    "Plan",
    "PlannerConfig",
    "Preference",
    "SpecificLocation",
    "admissible_locations",
    "constraint",
    "generate_case",
    "generate_dataset",
    "plan_with_refinement",
    "reward",
    "run_active_learning",
]
