"""Spectral Littlewood-Paley calculus, hybrid Besov norms, the linearized
compressible Navier-Stokes propagator and a pseudospectral solver."""
from .spectral import Grid, Multiplier, SpectralField, make_grid

__version__ = "0.1.0"

__all__ = ["Grid", "Multiplier", "SpectralField", "make_grid", "__version__"]
