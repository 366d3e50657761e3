"""Phase-space toolkit for the Klein model of noncompact complex projective space."""

from .charts import (
    ActionAngleState,
    CanonicalXPoint,
    RadialCanonicalPoint,
    canonical_to_klein,
    klein_to_canonical,
    symplectomorphism_check,
)
from .dynamics import IntegratorConfig, Trajectory, audit, flow_canonical, flow_complex
from .generators import GeneratorId, Generators, ModelParams, duality, gid
from .geometry import ConditioningError, DomainError, KleinPoint, PoincarePoint, geometry_sample, sample_points
from .models import AngularModel, HamiltonianSystem, TildeIntegral, build_system, preset_angular
from .poisson import bracket, poisson_tensor, verify_structure_constants

__version__ = "0.1.0"

__all__ = [
    "ActionAngleState",
    "AngularModel",
    "CanonicalXPoint",
    "ConditioningError",
    "DomainError",
    "GeneratorId",
    "Generators",
    "HamiltonianSystem",
    "IntegratorConfig",
    "KleinPoint",
    "ModelParams",
    "PoincarePoint",
    "RadialCanonicalPoint",
    "TildeIntegral",
    "Trajectory",
    "audit",
    "bracket",
    "build_system",
    "canonical_to_klein",
    "duality",
    "flow_canonical",
    "flow_complex",
    "geometry_sample",
    "gid",
    "klein_to_canonical",
    "poisson_tensor",
    "preset_angular",
    "sample_points",
    "symplectomorphism_check",
    "verify_structure_constants",
]
