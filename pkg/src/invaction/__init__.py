"""
invaction: a numerical laboratory for the invariant symplectic action of
linear torus actions on C^n, together with the loop and vortex experiments
built on it.
"""
from .lie_geom import TorusAction, Torus, UnitQuaternions, check_hypothesis_h, min_action_norm, moment
from .loops import DiscreteLoop, GaugeLoop, PairLoop, horizontal_gauge, invariant_action, lengths
from .isoperimetric import VerifierConfig, sharpness_witness, verify_batch
from .holonomy import ConnectionChart, holonomy, holonomy_bound_scaling
from .vortex import CylinderGrid, RadialProfile, VortexFields, decay_fit, embed_radial, solve_radial

__version__ = "0.1.0"

__all__ = [
    "TorusAction", "Torus", "UnitQuaternions", "check_hypothesis_h", "min_action_norm", "moment",
    "DiscreteLoop", "GaugeLoop", "PairLoop", "horizontal_gauge", "invariant_action", "lengths",
    "VerifierConfig", "sharpness_witness", "verify_batch",
    "ConnectionChart", "holonomy", "holonomy_bound_scaling",
    "CylinderGrid", "RadialProfile", "VortexFields", "decay_fit", "embed_radial", "solve_radial",
]
