#!/usr/bin/env python3
"""
Tests for the maximal graph solver and the boundary-data catalog.
Usage: python test_maximal_solver.py
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent / 'maxsurf'))

from boundary_data import boundary_values, evaluate
from chart_metric import make_grid, make_metric
from errors import ChartDomainError, ConfigError, SpacelikeBreakdown
from maximal_solver import (SolverSettings, discrete_area, harmonic_extension, mean_curvature_of_graph,
                            pde_residual, solve_maximal_graph)

SQUARE = (-1.0, 1.0, -1.0, 1.0)
CATENOID_CHART = (-3.0, 3.0, -3.0, 3.0)
ANNULUS = {'kind': 'annulus', 'center': [0.0, 0.0], 'r_inner': 0.5, 'r_outer': 3.0}


def _catenoid_error(nx):
    spec = make_metric('flat', chart=CATENOID_CHART)
    grid = make_grid(CATENOID_CHART, nx, domain=ANNULUS)
    b = boundary_values(grid, 'radial_asinh', {'c': 1.0})
    g = solve_maximal_graph(spec, grid, b)
    X, Y = grid.node_coords()
    return float(np.max(np.abs(g.u - np.arcsinh(np.hypot(X, Y)))[grid.active_mask])), g, spec


def test_boundary_catalog():
    X = np.array([[0.0, 1.0], [2.0, -1.0]])
    Y = np.array([[1.0, 0.5], [0.0, 2.0]])
    np.testing.assert_allclose(evaluate('affine', {'a': 1.0, 'b': 0.5, 'c': -1.0}, X, Y), 1.0 + 0.5 * X - Y)
    np.testing.assert_allclose(evaluate('polynomial', {'terms': [[2, 0, 1.0], [0, 1, 3.0]]}, X, Y), X ** 2 + 3 * Y)
    np.testing.assert_allclose(evaluate('constant', {'value': 0.7}, X, Y), 0.7)
    with pytest.raises(ConfigError):
        evaluate('spiral', {}, X, Y)


def test_slice_is_solved_without_iterations():
    spec = make_metric('flat')
    grid = make_grid(SQUARE, 17)
    g = solve_maximal_graph(spec, grid, np.full((17, 17), 0.7))
    np.testing.assert_allclose(g.u, 0.7, atol=1e-14)
    assert g.stats.iterations == 0
    assert g.spacelike_margin == pytest.approx(1.0)


def test_tilted_plane_is_reproduced():
    spec = make_metric('flat')
    grid = make_grid(SQUARE, 33)
    b = boundary_values(grid, 'affine', {'b': 0.6})
    g = solve_maximal_graph(spec, grid, b)
    X, _ = grid.node_coords()
    np.testing.assert_allclose(g.u, 0.6 * X, atol=1e-10)
    assert g.spacelike_margin == pytest.approx(0.64, abs=1e-9)
    assert pde_residual(g, spec) <= 1e-9


def test_harmonic_extension_reproduces_affine_data():
    grid = make_grid(SQUARE, 17)
    X, Y = grid.node_coords()
    b = 0.2 + 0.3 * X - 0.1 * Y
    data = b.copy()
    data[grid.active_mask] = 5.0
    np.testing.assert_allclose(harmonic_extension(grid, data), b, atol=1e-12)


def test_discrete_area():
    spec = make_metric('flat')
    grid = make_grid(SQUARE, 17)
    X, _ = grid.node_coords()
    assert discrete_area(np.zeros((17, 17)), spec, grid) == pytest.approx(4.0, rel=1e-12)
    assert discrete_area(0.6 * X, spec, grid) == pytest.approx(3.2, rel=1e-12)


def test_solution_maximizes_area():
    spec = make_metric('sphere', chart=(-1.5, 1.5, -1.5, 1.5))
    grid = make_grid(spec.chart, 25)
    b = boundary_values(grid, 'polynomial', {'terms': [[0, 0, 0.7], [2, 0, 0.06], [0, 2, -0.06]]})
    g = solve_maximal_graph(spec, grid, b)
    bump = np.zeros_like(g.u)
    bump[grid.active_mask] = 1e-3
    assert discrete_area(g.u, spec, grid) >= discrete_area(g.u + bump, spec, grid)
    assert discrete_area(g.u, spec, grid) >= discrete_area(g.u - bump, spec, grid)
    assert np.nanmax(np.abs(mean_curvature_of_graph(g, spec))) <= 1e-8


def test_catenoid_recovery_and_refinement():
    coarse, _, _ = _catenoid_error(33)
    fine, g, spec = _catenoid_error(65)
    assert fine <= 2e-2
    assert fine < coarse
    assert pde_residual(g, spec) <= 1e-9
    assert g.spacelike_margin > 0.0
    assert g.stats.final_residual <= 1e-10


def test_mean_curvature_is_nan_off_unknowns():
    spec = make_metric('flat')
    grid = make_grid(SQUARE, 17)
    g = solve_maximal_graph(spec, grid, np.zeros((17, 17)))
    H = mean_curvature_of_graph(g, spec)
    assert np.isnan(H[0, :]).all()
    assert np.isfinite(H[grid.active_mask]).all()


def test_steep_data_breaks_down():
    spec = make_metric('flat')
    grid = make_grid(SQUARE, 17)
    b = boundary_values(grid, 'affine', {'b': 1.2})
    with pytest.raises(SpacelikeBreakdown):
        solve_maximal_graph(spec, grid, b)


def test_solver_settings_validation():
    with pytest.raises(ChartDomainError):
        SolverSettings(spacelike_guard=1.5)
    with pytest.raises(ChartDomainError):
        SolverSettings(residual_tol=0.0)
    settings = SolverSettings.from_config({'solver': {'max_newton_iters': 7}})
    assert settings.max_newton_iters == 7 and settings.spacelike_guard == 1e-3


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, '-v']))
