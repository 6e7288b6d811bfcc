"""Gauss-map singularities of surfaces and the decay of the oscillatory
integrals, surface-measure transforms and dispersive kernels they govern,
plus spectral kernels of the cubic lattice and exact exponent regions.
"""
__version__ = "0.1.0"
