"""Simulation of logical qubits embedded in qudits under generalized Pauli errors."""

from .channels import DEFAULT_P, ErrorModel, apply_model, apply_single_site, evolve
from .experiments import ExperimentSpec, run
from .kohlrausch import KohlrauschFit, fit, kohlrausch
from .metrics import encoded_process_fidelity, entropy_productions, fidelity, von_neumann_entropy
from .operators import LogicalLevels, RegisterShape

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_P", "ErrorModel", "apply_model", "apply_single_site", "evolve",
    "ExperimentSpec", "run", "KohlrauschFit", "fit", "kohlrausch",
    "encoded_process_fidelity", "entropy_productions", "fidelity", "von_neumann_entropy",
    "LogicalLevels", "RegisterShape",
]
