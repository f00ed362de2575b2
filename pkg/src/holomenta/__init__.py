"""Nonholonomic mechanical systems with symmetry: dynamics on the constraint manifold and horizontal gauge momenta."""

from .integrate import Trajectory, conservation_report, integrate
from .mechanics import CTangent, MechanicalSystem, MPoint, hamiltonian_M, momenta, nonholonomic_vector_field
from .symmetry import GaugeMomentumReport, LieAlgebraAction, horizontal_gauge_momenta
from .systems import BuiltinFixture, builtin

__version__ = "0.1.0"

__all__ = [
    "BuiltinFixture",
    "CTangent",
    "GaugeMomentumReport",
    "LieAlgebraAction",
    "MPoint",
    "MechanicalSystem",
    "Trajectory",
    "builtin",
    "conservation_report",
    "hamiltonian_M",
    "horizontal_gauge_momenta",
    "integrate",
    "momenta",
    "nonholonomic_vector_field",
]
