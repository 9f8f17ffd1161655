#!/usr/bin/env python3
"""
Exception hierarchy shared by the laboratory modules.
"""


class MaxsurfError(Exception):
    """Base class for every error raised by the laboratory."""


class ChartDomainError(MaxsurfError, ValueError):
    """Point outside the chart, invalid grid, or argument outside an operation's domain."""


class ConfigError(MaxsurfError, ValueError):
    """Experiment configuration could not be parsed or failed validation."""


class SolverFailure(MaxsurfError, RuntimeError):
    """Newton iteration did not reach the residual tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SpacelikeBreakdown(MaxsurfError, RuntimeError):
    """An iterate left the spacelike set even under maximal damping."""

    def __init__(self, message, margin):
        super().__init__(message)
        self.margin = margin


class NonSpacelikeError(MaxsurfError, ValueError):
    """A node of the graph's domain has |Du|^2 >= 1."""


class NotMaximalError(MaxsurfError, ValueError):
    """An identity valid only for maximal surfaces was requested on a non-maximal graph."""

    def __init__(self, message, sup_H):
        super().__init__(message)
        self.sup_H = sup_H


class MeshError(MaxsurfError, ValueError):
    """Degenerate edge or triangle-inequality violation in the surface mesh."""


class NotContainedError(MaxsurfError, ValueError):
    """Geodesic disc reaches the mesh boundary, so D(p, r) is not compactly contained."""

    def __init__(self, message, radius):
        super().__init__(message)
        self.radius = radius


class UndefinedBoundError(MaxsurfError, ValueError):
    """Radius bound requested on a disc where the integral of |A|^2 vanishes."""
