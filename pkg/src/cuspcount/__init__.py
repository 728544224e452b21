"""Eigenvalue counting for Robin Laplacians on two-dimensional cusp domains.

Three independent routes to N_lambda are provided: exact inertia counts of a
mapped 2D finite element discretisation (:mod:`cuspcount.laplace2d`), Sturm
counts of the reduced 1D Schroedinger operators (:mod:`cuspcount.schrodinger1d`)
and closed-form asymptotic predictors (:mod:`cuspcount.asymptotics`).
"""

__version__ = "0.1.0"
