"""
maxsurf
Numerical laboratory for maximal spacelike graphs in M² × ℝ₁ and their
integral curvature estimate.
"""

__version__ = "1.0.0"
