"""Numerical toolkit for a parabolic automorphism of C^2 with a Fatou basin
attached to a degenerate characteristic direction."""
from .jets import Jet2, MapJet, characteristic_directions, director
from .mapchain import MapChain, default_chain, germ_of_chain, orbit
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "Jet2", "MapJet", "characteristic_directions", "director",
    "MapChain", "default_chain", "germ_of_chain", "orbit", "BACKEND",
]
