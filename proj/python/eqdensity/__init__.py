"""Finite-horizon experiments on equivalence structures.

Thin wrapper over the compiled core; rationals travel as "p/q" strings.
"""

from ._core import (
    BudgetExhausted,
    EnumerationOracle,
    EqStructure,
    Report,
    ScenarioError,
    ValidationError,
    build_12_density_q,
    extract_dense_subset,
    known_constructions,
    prefix_density,
    run_scenario_file,
    run_scenario_text,
    square_density_sweep,
    structure,
    structure_from_classes,
    validate_scenario_file,
)

__all__ = [
    "BudgetExhausted",
    "EnumerationOracle",
    "EqStructure",
    "Report",
    "ScenarioError",
    "ValidationError",
    "build_12_density_q",
    "extract_dense_subset",
    "known_constructions",
    "prefix_density",
    "run_scenario_file",
    "run_scenario_text",
    "square_density_sweep",
    "structure",
    "structure_from_classes",
    "validate_scenario_file",
]
