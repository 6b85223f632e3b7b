"""Boundary-integral contour dynamics for two nested growing interfaces.

A spectral simulator for a two-phase free-boundary problem on the plane: an
inner interface encloses a proliferating region whose pressure obeys Darcy's
law with a pressure-dependent source, and an outer interface bounds the
surrounding phase.  Both interfaces are star-shaped polar graphs evolved by
contour dynamics: layer-potential densities on the curves plus the gradient of
the source's Newtonian potential, advanced in time with a per-mode exponential
integrator.
"""

from .geometry import InterfacePair, default_delta
from .pressure import GrowthLaw
from .spectral import PeriodicField

__version__ = "0.1.0"

__all__ = ["InterfacePair", "GrowthLaw", "PeriodicField", "__version__"]
