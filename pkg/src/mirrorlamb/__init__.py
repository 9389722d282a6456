"""Collective Lamb shift of superconducting qubits in front of a mirror.

Couplings, master equations, steady-state and weak-field solvers,
reflection spectra, closed-form two-qubit results and the giant-atom
reduction.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ClassificationError, ConfigError, DegeneracyError, DomainError, MirrorLambError,
    ResolutionError, SingularityError, SolverError, StiffnessError, ValidityError,
)
from .model import (  # noqa: F401
    ProbeSpec, QubitArray, QubitSpec, TransmonParams, UnitScale, WaveguideSpec,
    ideal_array, to_internal_units, from_internal_units,
)
from .rddi import build_couplings, build_level_couplings  # noqa: F401
from .spectra import extract_features, scan  # noqa: F401
