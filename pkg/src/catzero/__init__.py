"""Toolkit for nonpositively curved piecewise-Euclidean 2-complexes.

Builds complexes from a small text format, certifies the curvature
condition, develops metric balls, computes exact geodesics and upper
angles, enumerates maximal flat discs, and runs coarse isolation
diagnostics on flats and on Cayley graphs of finitely presented groups.
"""

__version__ = "0.1.0"
