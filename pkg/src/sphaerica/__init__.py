"""Potential theory intrinsic to the unit sphere.

Closed-form kernels (fundamental solution of the surface Laplacian and cap
Green functions), quadrature-backed solvers for the Poisson, Dirichlet, and
Neumann problems on spherical caps, curve-potential machinery with the
classical limit and jump behavior, Helmholtz and Hardy-Hodge field
decompositions, a method-of-fundamental-solutions fitting engine, and three
desk-scale geoscience applications driven by synthetic data with analytic
oracles.
"""

__version__ = "0.1.0"
