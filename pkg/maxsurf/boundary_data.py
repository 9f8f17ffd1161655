#!/usr/bin/env python3
"""
Catalog of Dirichlet data for the maximal graph problem.
"""

import logging

import numpy as np

from errors import ConfigError

logger = logging.getLogger(__name__)


def _constant(X, Y, params):
    return np.full_like(X, float(params.get('value', 0.0)), dtype=float)


def _affine(X, Y, params):
    return float(params.get('a', 0.0)) + float(params.get('b', 0.0)) * X + float(params.get('c', 0.0)) * Y


def _radial_asinh(X, Y, params):
    # Lorentzian catenoid u = c·asinh(ρ/c) over flat M
    c = float(params.get('c', 1.0))
    cx, cy = params.get('center', [0.0, 0.0])
    return c * np.arcsinh(np.hypot(X - cx, Y - cy) / c)


def _polynomial(X, Y, params):
    u = np.zeros_like(X, dtype=float)
    for i, j, coef in params.get('terms', []):
        u = u + float(coef) * X ** int(i) * Y ** int(j)
    return u


BOUNDARY_CATALOG = {
    'constant': _constant,
    'affine': _affine,
    'radial_asinh': _radial_asinh,
    'polynomial': _polynomial,
}


def evaluate(name, params, X, Y):
    """Evaluate catalog entry `name` at chart points X, Y."""
    if name not in BOUNDARY_CATALOG:
        raise ConfigError(f"Unknown boundary data '{name}', expected one of {sorted(BOUNDARY_CATALOG)}")
    return BOUNDARY_CATALOG[name](np.asarray(X, dtype=float), np.asarray(Y, dtype=float), params or {})


def boundary_values(grid, name, params=None):
    """
    Boundary function sampled on every node of the grid.

    Only the non-active nodes are used as Dirichlet data; the active values
    are a convenient reference (e.g. the exact solution for catalog cases).
    """
    X, Y = grid.node_coords()
    values = evaluate(name, params or {}, X, Y)
    logger.debug(f"Boundary data '{name}' with {params}: range [{values.min():.4f}, {values.max():.4f}]")
    return values
