"""Displacement estimation with classically correlated squeezed probes.

Gaussian moment simulation, Fisher information and Cramer-Rao tooling for
comparing entangled, separable-squeezed and Fock-state strategies for the
two quadrature shifts of a phase-space displacement, with and without loss.
"""

__version__ = "0.1.0"
