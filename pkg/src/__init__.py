"""
krylovlab

Numerical lab for Krylov solvability of compact normal operators: finite
models A = U D U*, Arnoldi bases, the Krylov solution of Af = g with its
certificates, Riesz projections and their polynomial approximations, and the
scalar spectral measure of a vector.
"""

__version__ = "0.1.0"
