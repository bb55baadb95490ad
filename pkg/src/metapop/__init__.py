"""Stochastic metapopulation models, their deterministic limits, couplings
and computable approximation bounds."""

from .landscape import Landscape, build_landscape, connectivity, from_arrays
from .rates import RateModel

__version__ = "0.1.0"

__all__ = ["Landscape", "RateModel", "build_landscape", "connectivity", "from_arrays", "__version__"]
