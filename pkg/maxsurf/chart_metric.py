#!/usr/bin/env python3
"""
Base surface M on a coordinate chart.

The metric is conformal, g_M = e^{2λ}(dx² + dy²), with λ taken from a small
catalog of closed forms whose first and second derivatives are exact. Every
callback accepts scalars or numpy arrays.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import ndimage

from errors import ChartDomainError

logger = logging.getLogger(__name__)

TOL_CURV = 1e-10
MIN_NODES = 9


@dataclass(frozen=True)
class MetricSpec:
    """Conformal metric e^{2λ}(dx²+dy²) on the rectangle chart = (x0, x1, y0, y1)."""
    name: str
    chart: Tuple[float, float, float, float]
    lam: Callable
    lam_x: Callable
    lam_y: Callable
    lam_xx: Callable
    lam_yy: Callable
    params: Dict = field(default_factory=dict)

    def contains(self, x, y, slack=1e-12):
        x0, x1, y0, y1 = self.chart
        return (x >= x0 - slack) & (x <= x1 + slack) & (y >= y0 - slack) & (y <= y1 + slack)


def _flat(params):
    zero = lambda x, y: np.zeros_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    return zero, zero, zero, zero, zero


def _sphere(params):
    # stereographic chart of the unit sphere, tangent plane at the pole
    def q(x, y):
        return 1.0 + (x * x + y * y) / 4.0

    lam = lambda x, y: -np.log(q(x, y))
    lam_x = lambda x, y: -(x / 2.0) / q(x, y)
    lam_y = lambda x, y: -(y / 2.0) / q(x, y)
    lam_xx = lambda x, y: -(0.5 * q(x, y) - x * x / 4.0) / q(x, y) ** 2
    lam_yy = lambda x, y: -(0.5 * q(x, y) - y * y / 4.0) / q(x, y) ** 2
    return lam, lam_x, lam_y, lam_xx, lam_yy


def _bump(params):
    a = float(params.get('a', 0.25))
    shape = lambda x, y: np.ones_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    lam = lambda x, y: -a * (x * x + y * y)
    lam_x = lambda x, y: -2.0 * a * x
    lam_y = lambda x, y: -2.0 * a * y
    lam_xx = lambda x, y: -2.0 * a * shape(x, y)
    lam_yy = lambda x, y: -2.0 * a * shape(x, y)
    return lam, lam_x, lam_y, lam_xx, lam_yy


# name -> builder(params) returning (λ, λ_x, λ_y, λ_xx, λ_yy); extend by adding rows
METRIC_CATALOG = {
    'flat': _flat,
    'sphere': _sphere,
    'bump': _bump,
}


def make_metric(name, params=None, chart=(-1.0, 1.0, -1.0, 1.0)):
    """
    Build a MetricSpec from the catalog.

    Args:
        name: Catalog entry ('flat', 'sphere' or 'bump')
        params: Entry parameters (bump: {'a': float})
        chart: (x0, x1, y0, y1)

    Returns:
        MetricSpec
    """
    if name not in METRIC_CATALOG:
        raise ChartDomainError(f"Unknown metric '{name}', expected one of {sorted(METRIC_CATALOG)}")
    x0, x1, y0, y1 = (float(c) for c in chart)
    if not (x1 > x0 and y1 > y0):
        raise ChartDomainError(f"Chart {chart} has zero measure")
    params = dict(params or {})
    callbacks = METRIC_CATALOG[name](params)
    return MetricSpec(name, (x0, x1, y0, y1), *callbacks, params=params)


@dataclass
class Grid:
    """
    Node grid on the chart, indexed [i, j] with x along axis 0.

    domain_mask marks nodes where the graph is defined; active_mask marks the
    unknowns of the Dirichlet problem. Every other node carries boundary data.
    residual_margin is the chart distance from the domain boundary inside
    which residual sups are not taken.
    """
    nx: int
    ny: int
    chart: Tuple[float, float, float, float]
    domain_mask: np.ndarray
    active_mask: np.ndarray
    domain: Dict = field(default_factory=lambda: {'kind': 'rectangle'})
    residual_margin: float = 0.0

    @property
    def hx(self):
        return (self.chart[1] - self.chart[0]) / (self.nx - 1)

    @property
    def hy(self):
        return (self.chart[3] - self.chart[2]) / (self.ny - 1)

    @property
    def x(self):
        return np.linspace(self.chart[0], self.chart[1], self.nx)

    @property
    def y(self):
        return np.linspace(self.chart[2], self.chart[3], self.ny)

    def node_coords(self):
        """Return (X, Y) arrays of shape (nx, ny)."""
        return np.meshgrid(self.x, self.y, indexing='ij')

    def nearest_node(self, point):
        """Snap a chart point to the nearest grid node index (i, j)."""
        i = int(round((point[0] - self.chart[0]) / self.hx))
        j = int(round((point[1] - self.chart[2]) / self.hy))
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def interior_mask(self, depth):
        """Domain nodes whose (2*depth+1)² neighbourhood lies in the domain."""
        if depth <= 0:
            return self.domain_mask.copy()
        return ndimage.binary_erosion(self.domain_mask, structure=np.ones((3, 3), dtype=bool),
                                      iterations=depth, border_value=0)

    def boundary_distance(self):
        """Chart distance from every node to the boundary of the domain (chart edges included)."""
        X, Y = self.node_coords()
        x0, x1, y0, y1 = self.chart
        dist = np.minimum.reduce([X - x0, x1 - X, Y - y0, y1 - Y])
        if self.domain.get('kind') == 'annulus':
            cx, cy = self.domain.get('center', [0.0, 0.0])
            rho = np.hypot(X - cx, Y - cy)
            dist = np.minimum(dist, np.minimum(rho - float(self.domain['r_inner']),
                                               float(self.domain['r_outer']) - rho))
        return dist

    def residual_mask(self, depth):
        """interior_mask(depth) restricted to nodes at least residual_margin inside the domain."""
        mask = self.interior_mask(depth)
        if self.residual_margin > 0.0:
            mask &= self.boundary_distance() >= self.residual_margin - 1e-12
        return mask

    def shared_nodes(self, coarse_nx, coarse_ny=None):
        """
        Nodes that also belong to a coarser grid on the same chart.

        Returns None unless the coarse spacing is an integer multiple of this one.
        """
        coarse_ny = coarse_nx if coarse_ny is None else coarse_ny
        if (self.nx - 1) % (coarse_nx - 1) or (self.ny - 1) % (coarse_ny - 1):
            return None
        sx, sy = (self.nx - 1) // (coarse_nx - 1), (self.ny - 1) // (coarse_ny - 1)
        mask = np.zeros((self.nx, self.ny), dtype=bool)
        mask[::sx, ::sy] = True
        return mask


def make_grid(chart, nx, ny=None, domain=None, residual_margin=0.0):
    """
    Build a grid, optionally restricted to an annular domain.

    Args:
        chart: (x0, x1, y0, y1)
        nx: Node count along x
        ny: Node count along y (defaults to nx)
        domain: None / {'kind': 'rectangle'} or
            {'kind': 'annulus', 'center': [cx, cy], 'r_inner': a, 'r_outer': b}
        residual_margin: Chart distance kept clear of the domain boundary
            when residual sups are taken

    Returns:
        Grid
    """
    ny = nx if ny is None else ny
    nx, ny = int(nx), int(ny)
    if nx < MIN_NODES or ny < MIN_NODES:
        raise ChartDomainError(f"Grid needs at least {MIN_NODES} nodes per axis, got {nx}x{ny}")
    x0, x1, y0, y1 = (float(c) for c in chart)
    if not (x1 > x0 and y1 > y0):
        raise ChartDomainError(f"Chart {chart} has zero measure")

    edge = np.zeros((nx, ny), dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True

    domain = domain or {'kind': 'rectangle'}
    kind = domain.get('kind', 'rectangle')
    if kind == 'rectangle':
        domain_mask = np.ones((nx, ny), dtype=bool)
        active_mask = ~edge
    elif kind == 'annulus':
        cx, cy = domain.get('center', [0.0, 0.0])
        r_in, r_out = float(domain['r_inner']), float(domain['r_outer'])
        if not 0.0 <= r_in < r_out:
            raise ChartDomainError(f"Annulus radii must satisfy 0 <= r_inner < r_outer, got {r_in}, {r_out}")
        X, Y = np.meshgrid(np.linspace(x0, x1, nx), np.linspace(y0, y1, ny), indexing='ij')
        rho = np.hypot(X - cx, Y - cy)
        slack = 1e-12 * max(1.0, r_out)
        domain_mask = (rho >= r_in - slack) & (rho <= r_out + slack)
        active_mask = (rho > r_in + slack) & (rho < r_out - slack) & ~edge
    else:
        raise ChartDomainError(f"Unknown domain kind '{kind}'")

    if not active_mask.any():
        raise ChartDomainError("Grid has no interior nodes")

    if residual_margin < 0.0:
        raise ChartDomainError(f"residual_margin must be non-negative, got {residual_margin}")
    grid = Grid(nx, ny, (x0, x1, y0, y1), domain_mask, active_mask, dict(domain), float(residual_margin))
    logger.debug(f"Grid {nx}x{ny} on {grid.chart} ({kind}), {int(active_mask.sum())} unknowns")
    return grid


def _check_inside(spec, x, y):
    if not np.all(spec.contains(np.asarray(x), np.asarray(y))):
        raise ChartDomainError(f"Point ({x}, {y}) outside chart {spec.chart}")


def metric_at(spec, point):
    """
    Metric tensor components at a chart point.

    Returns:
        tuple: (g11, g12, g22) with g11 = g22 = e^{2λ}, g12 = 0
    """
    x, y = point
    _check_inside(spec, x, y)
    factor = float(np.exp(2.0 * spec.lam(x, y)))
    return factor, 0.0, factor


def conformal_factor(spec, x, y):
    """e^{λ} at chart points (array friendly, no domain check)."""
    return np.exp(spec.lam(x, y))


def gaussian_curvature_M(spec, x, y):
    """K_M = -e^{-2λ}(λ_xx + λ_yy) from the closed-form derivatives."""
    _check_inside(spec, x, y)
    return -np.exp(-2.0 * spec.lam(x, y)) * (spec.lam_xx(x, y) + spec.lam_yy(x, y))


def validate_nonnegative_curvature(spec, grid, tol=TOL_CURV):
    """
    Check the hypothesis K_M >= 0 on every grid node.

    Returns:
        tuple: (ok, minimum K_M found)
    """
    X, Y = grid.node_coords()
    k_min = float(np.min(gaussian_curvature_M(spec, X, Y)))
    ok = k_min >= -tol
    if not ok:
        logger.warning(f"Metric '{spec.name}' has K_M = {k_min:.3e} < 0 on the chart")
    return ok, k_min


def is_positive_somewhere(spec, grid, tol=TOL_CURV):
    """True when K_M > tol at some node; maximal graphs over such M are slices."""
    X, Y = grid.node_coords()
    return bool(np.max(gaussian_curvature_M(spec, X, Y)) > tol)
