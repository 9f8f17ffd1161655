#!/usr/bin/env python3
"""
Tests for the pointwise geometry of graphs: Gauss map, shape operator,
curvature and the maximal-surface identities.
Usage: python test_surface_geometry.py
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent / 'maxsurf'))

from chart_metric import make_grid, make_metric
from errors import NonSpacelikeError, NotMaximalError
from maximal_solver import make_graph
from surface_geometry import (compute_geometry, gauss_curvature_sigma, gauss_map_theta, identity_checks,
                              induced_metric, laplace_beltrami, shape_operator)

IDENTITIES = ['gradient', 'gradient_norm', 'laplacian', 'tangent_norm', 'square']


def _catenoid(nx):
    chart = (-3.0, 3.0, -3.0, 3.0)
    spec = make_metric('flat', chart=chart)
    grid = make_grid(chart, nx, domain={'kind': 'annulus', 'center': [0.0, 0.0], 'r_inner': 0.5, 'r_outer': 3.0},
                     residual_margin=0.75)
    X, Y = grid.node_coords()
    g = make_graph(spec, grid, np.arcsinh(np.hypot(X, Y)))
    return spec, grid, compute_geometry(g, spec)


def test_slice_geometry():
    spec = make_metric('sphere', chart=(-1.5, 1.5, -1.5, 1.5))
    grid = make_grid(spec.chart, 33)
    g = make_graph(spec, grid, np.full((33, 33), 0.7))
    geom = compute_geometry(g, spec)
    np.testing.assert_allclose(gauss_map_theta(g, spec), -1.0, atol=1e-14)
    assert np.max(geom.a_norm_sq) <= 1e-20
    np.testing.assert_allclose(geom.mean_H, 0.0, atol=1e-14)
    checks = identity_checks(geom, spec)
    for name in IDENTITIES:
        assert checks[name] <= 1e-10, name


def test_sphere_slice_gauss_equation():
    spec = make_metric('sphere', chart=(-1.5, 1.5, -1.5, 1.5))
    grid = make_grid(spec.chart, 97)
    g = make_graph(spec, grid, np.full((97, 97), 0.7))
    geom = compute_geometry(g, spec)
    gauss = gauss_curvature_sigma(geom, spec)
    mask = geom.report_mask
    np.testing.assert_allclose(gauss['from_gauss_equation'][mask], 1.0, atol=1e-12)
    np.testing.assert_allclose(gauss['intrinsic'][mask], 1.0, atol=1e-2)
    assert gauss['sup_difference'] <= 1e-2


def test_tilted_plane_geometry():
    spec = make_metric('flat')
    grid = make_grid((-1.0, 1.0, -1.0, 1.0), 33)
    X, _ = grid.node_coords()
    g = make_graph(spec, grid, 0.6 * X)
    g11, g12, g22 = induced_metric(g, spec)
    np.testing.assert_allclose(g11, 0.64, atol=1e-12)
    np.testing.assert_allclose(g12, 0.0, atol=1e-12)
    np.testing.assert_allclose(g22, 1.0, atol=1e-12)
    geom = compute_geometry(g, spec)
    np.testing.assert_allclose(geom.theta, -1.25, atol=1e-12)
    assert np.max(geom.a_norm_sq) <= 1e-16
    checks = identity_checks(geom, spec)
    for name in IDENTITIES:
        assert checks[name] <= 1e-10, name
    assert checks['theta_arctan_ok']


def test_catenoid_closed_forms():
    _, grid, geom = _catenoid(97)
    X, Y = grid.node_coords()
    rho = np.hypot(X, Y)
    mask = geom.residual_mask()
    np.testing.assert_allclose(geom.theta[mask], -np.sqrt(rho[mask] ** 2 + 1.0) / rho[mask], rtol=1e-2)
    np.testing.assert_allclose(geom.a_norm_sq[mask], 2.0 / rho[mask] ** 4, rtol=3e-2, atol=1e-3)
    np.testing.assert_allclose(np.sqrt(geom.det_g[mask]), rho[mask] / np.sqrt(rho[mask] ** 2 + 1.0), rtol=1e-2)
    assert np.max(np.abs(geom.mean_H[mask])) <= 2e-2


def test_catenoid_identities_converge():
    spec, coarse_grid, coarse = _catenoid(129)
    _, fine_grid, fine = _catenoid(257)
    shared = fine_grid.shared_nodes(129)
    c = identity_checks(coarse, spec)
    f = identity_checks(fine, spec, shared)
    for name in ('gradient', 'gradient_norm', 'laplacian'):
        assert f[name] <= 1e-2, name
        assert math.log2(c[name] / f[name]) >= 1.8, name
    assert f['tangent_norm'] <= 1e-10
    assert f['theta_arctan_ok']
    assert f['lowered_asymmetry'] <= 1e-2


def test_catenoid_gauss_cross_check():
    spec, _, coarse = _catenoid(129)
    _, fine_grid, fine = _catenoid(257)
    c = gauss_curvature_sigma(coarse, spec)['sup_difference']
    f = gauss_curvature_sigma(fine, spec, nodes=fine_grid.shared_nodes(129))['sup_difference']
    assert f <= 2e-2
    assert math.log2(c / f) >= 1.8


def test_shape_operator_of_tilted_plane_vanishes():
    spec = make_metric('flat')
    grid = make_grid((-1.0, 1.0, -1.0, 1.0), 17)
    X, Y = grid.node_coords()
    A, h = shape_operator(make_graph(spec, grid, 0.3 * X - 0.4 * Y), spec)
    assert np.max(np.abs(A)) <= 1e-10
    assert np.max(np.abs(h)) <= 1e-10


def test_laplace_beltrami_on_flat_plane():
    spec = make_metric('flat')
    grid = make_grid((-1.0, 1.0, -1.0, 1.0), 33)
    X, Y = grid.node_coords()
    geom = compute_geometry(make_graph(spec, grid, np.zeros_like(X)), spec)
    lap = laplace_beltrami(X ** 2 + 3.0 * Y ** 2, geom)
    np.testing.assert_allclose(lap[geom.report_mask], 8.0, atol=1e-9)


def test_non_maximal_graph_is_refused():
    spec = make_metric('flat')
    grid = make_grid((-1.0, 1.0, -1.0, 1.0), 33)
    X, Y = grid.node_coords()
    geom = compute_geometry(make_graph(spec, grid, 0.3 * (X ** 2 + Y ** 2)), spec)
    with pytest.raises(NotMaximalError):
        gauss_curvature_sigma(geom, spec)


def test_non_spacelike_graph_is_refused():
    spec = make_metric('flat')
    grid = make_grid((-1.0, 1.0, -1.0, 1.0), 17)
    X, _ = grid.node_coords()
    with pytest.raises(NonSpacelikeError):
        compute_geometry(make_graph(spec, grid, 1.2 * X), spec)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, '-v']))
