"""Finite Lipschitz-free space laboratory.

Exact Kantorovich-Rubinstein norms, the metric spaces built from diamonds,
chains and trimmed gluings, and checkable certificates for iterated slice
derivations of the free-space unit ball.
"""

__version__ = "0.1.0"
