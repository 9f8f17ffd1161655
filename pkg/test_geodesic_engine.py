#!/usr/bin/env python3
"""
Tests for the surface mesh, fast-marching distances and geodesic discs.
Usage: python test_geodesic_engine.py
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent / 'maxsurf'))

from chart_metric import make_grid, make_metric
from errors import ChartDomainError, MeshError, NotContainedError
from geodesic_engine import (_assemble_polylines, disc_extract, disc_integral, geodesic_distance,
                             triangle_consistency, triangulate)
from maximal_solver import make_graph
from scenarios import ellipse_circumference, great_circle_distance
from surface_geometry import compute_geometry

SQUARE = (-1.0, 1.0, -1.0, 1.0)


def _mesh(metric, chart, nx, height):
    spec = make_metric(metric, chart=chart)
    grid = make_grid(chart, nx)
    X, Y = grid.node_coords()
    g = make_graph(spec, grid, height(X, Y))
    return spec, grid, triangulate(g, compute_geometry(g, spec), spec)


def _flat(nx=65):
    return _mesh('flat', SQUARE, nx, lambda X, Y: np.zeros_like(X))


def _tilted(nx=65):
    return _mesh('flat', SQUARE, nx, lambda X, Y: 0.6 * X)


def test_unit_cells():
    _, _, mesh = _mesh('flat', (0.0, 8.0, 0.0, 8.0), 9, lambda X, Y: np.zeros_like(X))
    assert len(mesh.triangles) == 128
    np.testing.assert_allclose(np.sort(mesh.lengths, axis=1), [[1.0, 1.0, math.sqrt(2.0)]] * 128, atol=1e-14)
    np.testing.assert_allclose(mesh.areas, 0.5, atol=1e-14)
    assert len(mesh.boundary_vertices) == 32


def test_tilted_plane_edge_lengths():
    _, grid, mesh = _tilted(17)
    h = grid.hx
    expected = sorted([0.8 * h, h, math.sqrt(1.64) * h])
    np.testing.assert_allclose(np.sort(mesh.lengths, axis=1), [expected] * len(mesh.triangles), rtol=1e-12)


def test_sphere_edges_use_the_conformal_factor():
    spec, grid, mesh = _mesh('sphere', (-1.5, 1.5, -1.5, 1.5), 17, lambda X, Y: np.full_like(X, 0.7))
    h = grid.hx
    for t in (0, len(mesh.triangles) // 2, len(mesh.triangles) - 1):
        tri = mesh.triangles[t]
        a, b = tri[1], tri[2]
        mid = 0.5 * (mesh.coords[a] + mesh.coords[b])
        chart_len = np.linalg.norm(mesh.coords[b] - mesh.coords[a])
        expected = chart_len / (1.0 + (mid[0] ** 2 + mid[1] ** 2) / 4.0)
        assert mesh.lengths[t, 0] == pytest.approx(expected, rel=1e-12)
        assert chart_len >= h - 1e-12


def test_timelike_edges_are_rejected():
    spec = make_metric('flat')
    grid = make_grid(SQUARE, 17)
    X, _ = grid.node_coords()
    geom = compute_geometry(make_graph(spec, grid, np.zeros_like(X)), spec)
    with pytest.raises(MeshError):
        triangulate(make_graph(spec, grid, 1.2 * X), geom, spec)


@pytest.mark.parametrize('surface, oracle', [
    (_flat, lambda c, X, Y: np.hypot(X - c[0], Y - c[1])),
    (_tilted, lambda c, X, Y: np.sqrt(0.64 * (X - c[0]) ** 2 + (Y - c[1]) ** 2)),
])
def test_fast_marching_matches_planar_distance(surface, oracle):
    _, grid, mesh = surface()
    field = geodesic_distance(mesh, grid.nearest_node((0.0, 0.0)))
    exact = oracle(mesh.coords[field.source], mesh.coords[:, 0], mesh.coords[:, 1])
    assert field.d[field.source] == 0.0
    assert field.unreachable == 0
    far = exact >= 10.0 * grid.hx
    np.testing.assert_allclose(field.d[far], exact[far], rtol=5e-2)
    assert triangle_consistency(field) <= 1e-12


def test_fast_marching_on_the_sphere():
    _, grid, mesh = _mesh('sphere', (-1.5, 1.5, -1.5, 1.5), 65, lambda X, Y: np.full_like(X, 0.7))
    field = geodesic_distance(mesh, grid.nearest_node((0.3, -0.2)))
    center = mesh.coords[field.source]
    exact = great_circle_distance(center, mesh.coords[:, 0], mesh.coords[:, 1])
    far = exact >= 10.0 * grid.hx
    np.testing.assert_allclose(field.d[far], exact[far], rtol=5e-2)
    assert triangle_consistency(field) <= 1e-12


def test_flat_disc_length_and_area():
    _, grid, mesh = _flat()
    field = geodesic_distance(mesh, grid.nearest_node((0.0, 0.0)))
    lengths, areas = [], []
    for r in (0.2, 0.4, 0.6):
        disc = disc_extract(field, r)
        assert disc.closed and disc.n_components == 1 and not disc.multi_component
        assert disc.L == pytest.approx(2.0 * math.pi * r, rel=3e-2)
        assert disc.area == pytest.approx(math.pi * r * r, rel=3e-2)
        assert disc_integral(disc, np.ones(mesh.n_vertices)) == pytest.approx(disc.area, rel=1e-12)
        lengths.append(disc.L)
        areas.append(disc.area)
    assert lengths == sorted(lengths) and areas == sorted(areas)


def test_sphere_circle_length():
    _, grid, mesh = _mesh('sphere', (-1.5, 1.5, -1.5, 1.5), 65, lambda X, Y: np.full_like(X, 0.7))
    field = geodesic_distance(mesh, grid.nearest_node((0.0, 0.0)))
    for r in (0.4, 0.8):
        disc = disc_extract(field, r)
        assert disc.L == pytest.approx(2.0 * math.pi * math.sin(r), rel=5e-2)


def test_tilted_circles_are_chart_ellipses():
    _, grid, mesh = _tilted()
    field = geodesic_distance(mesh, grid.nearest_node((0.0, 0.0)))
    r = 0.4
    disc = disc_extract(field, r)
    assert disc.L == pytest.approx(2.0 * math.pi * r, rel=3e-2)
    assert disc.chart_length == pytest.approx(ellipse_circumference(r / 0.8, r), rel=3e-2)


def test_disc_reaching_the_boundary():
    _, grid, mesh = _flat(33)
    field = geodesic_distance(mesh, grid.nearest_node((0.0, 0.0)))
    with pytest.raises(NotContainedError):
        disc_extract(field, 1.2)
    with pytest.raises(ChartDomainError):
        disc_extract(field, 0.0)


def test_stopped_marching():
    _, grid, mesh = _flat(33)
    field = geodesic_distance(mesh, grid.nearest_node((0.0, 0.0)), stop_at=0.5)
    corner = mesh.vertex_index((0, 0))
    assert np.isinf(field.d[corner])
    assert field.unreachable > 0
    assert np.isfinite(field.d[mesh.vertex_index(grid.nearest_node((0.25, 0.0)))])
    disc = disc_extract(field, 0.3)
    assert disc.L == pytest.approx(2.0 * math.pi * 0.3, rel=5e-2)
    with pytest.raises(ChartDomainError):
        disc_extract(field, 0.45)


def test_open_chain_is_not_closed():
    links = {1: [2], 2: [1, 3], 3: [2]}
    positions = {k: np.array([float(k), 0.0]) for k in links}
    polylines, closed = _assemble_polylines(links, positions)
    assert not closed
    assert len(polylines) == 1
    np.testing.assert_allclose(polylines[0][:, 0], [1.0, 2.0, 3.0])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, '-v']))
