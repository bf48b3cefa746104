"""Numerical geometry of convex cones and weighted norm inequalities for cone operators."""
from .charfn import delta, delta_mc, phi, phi_mc, sigma0, sigma0_estimate
from .cones import (ConeModel, contains, dual, lorentz, orthant, parse_cone, product,
                    simplicial)
from .harness import InequalityCase, check_conditions, probe_violation, sweep, verify
from .mc import McConfig, McEstimate
from .star import fixed_point

__version__ = "0.1.0"

__all__ = [
    "ConeModel", "InequalityCase", "McConfig", "McEstimate", "check_conditions", "contains",
    "delta", "delta_mc", "dual", "fixed_point", "lorentz", "orthant", "parse_cone", "phi",
    "phi_mc", "probe_violation", "product", "sigma0", "sigma0_estimate", "simplicial",
    "sweep", "verify",
]
