"""Van Hove operator mechanics and classical-quantum hybrid dynamics."""

from ._core import (
    Grid,
    Polynomial,
    apply_vanhove,
    commutator_residual,
    construct_oscillator_sigma,
    dirac_rule_audit,
    expectation,
    gaussian_density,
    liouville_evolve,
    list_scenarios,
    qubit_measurement,
    run_scenario,
    tau_flow,
    verify_constraints,
)

__all__ = [
    "Grid",
    "Polynomial",
    "apply_vanhove",
    "commutator_residual",
    "construct_oscillator_sigma",
    "dirac_rule_audit",
    "expectation",
    "gaussian_density",
    "liouville_evolve",
    "list_scenarios",
    "qubit_measurement",
    "run_scenario",
    "tau_flow",
    "verify_constraints",
]
