"""femkit: a small finite-element toolkit.

Galerkin discretizations with P1/P2 Lagrange elements on 1D partitions and
2D triangulations, a stabilized Taylor-Hood Stokes solver, an implicit-Euler
advection-diffusion solver, and a one-way coupled pipeline that advects a
scalar with the Stokes velocity field.  A small CLI drives everything from
plain-text config and mesh files.
"""

__version__ = "0.1.0"
