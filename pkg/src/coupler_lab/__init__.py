"""Tunable-coupler two-qubit gate toolkit.

Exact spectra of the qubit-coupler-qubit circuit, closed-form effective
Hamiltonian quantities, ZZ characterization, and Lindblad gate errors.
"""

__version__ = "0.1.0"

from .errors import (
    CouplerLabError,
    ConfigError,
    ContractError,
    SingularParameterError,
    AmbiguousLabelError,
    NoBracketError,
    InvariantError,
    EigenSolverError,
    RegimeWarning,
)
from .hilbert import FockSpace, HermitianOperator, annihilation, tensor_embed, eigh
from .hamiltonian import CircuitParams, build_lab, build_eff1, build_eff2
from .spectral import label_spectrum, zz_numeric, geff_numeric
from .analytics import effective_params
