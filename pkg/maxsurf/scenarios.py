#!/usr/bin/env python3
"""
Scenario catalog: metric, domain and boundary data for each named experiment,
with the closed forms used to check the pipeline where they exist.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import integrate

from errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class Scenario:
    name: str
    metric: str
    chart: List[float]
    boundary: str
    boundary_params: Dict = field(default_factory=dict)
    metric_params: Dict = field(default_factory=dict)
    domain: Dict = field(default_factory=lambda: {'kind': 'rectangle'})
    center: List[float] = field(default_factory=lambda: [0.0, 0.0])
    # largest R the default sweep may use around `center`, divided by 1.05
    R_available: float = 0.5
    pairs: List[List[float]] = field(default_factory=list)
    exact_u: Optional[Callable] = None
    # (center, X, Y) -> intrinsic distance
    distance: Optional[Callable] = None
    # (x, y) -> ‖A‖²·√det g per unit chart area
    density: Optional[Callable] = None
    circle_length: Optional[Callable] = None
    chart_circle_length: Optional[Callable] = None
    # chart distance from the domain boundary kept out of residual sups
    residual_margin: float = 0.0
    slice: bool = False
    totally_geodesic: bool = False

    def to_config(self):
        """Config sections this scenario fills in when the user leaves them out."""
        return {
            'metric': {'name': self.metric, 'params': dict(self.metric_params)},
            'boundary': {'name': self.boundary, 'params': dict(self.boundary_params)},
            'chart': {'x0': self.chart[0], 'x1': self.chart[1], 'y0': self.chart[2], 'y1': self.chart[3]},
            'domain': dict(self.domain),
            'disc': {'center': list(self.center), 'pairs': [list(p) for p in self.pairs]},
            'grid': {'residual_margin': self.residual_margin},
        }


def _euclidean(center, X, Y):
    return np.hypot(X - center[0], Y - center[1])


def _tilted(center, X, Y, slope=0.6):
    return np.sqrt((1.0 - slope ** 2) * (X - center[0]) ** 2 + (Y - center[1]) ** 2)


def _stereographic(X, Y):
    rho_sq = X * X + Y * Y
    return np.stack([4.0 * X, 4.0 * Y, rho_sq - 4.0]) / (4.0 + rho_sq)


def great_circle_distance(center, X, Y):
    """Unit-sphere distance between stereographic chart points (tangent plane at the pole)."""
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    P = _stereographic(np.asarray(center[0], dtype=float), np.asarray(center[1], dtype=float))
    Q = _stereographic(X, Y)
    dot = np.tensordot(P, Q, axes=(0, 0))
    return np.arccos(np.clip(dot, -1.0, 1.0))


def catenoid_density(x, y, c=1.0):
    """‖A‖²√det g of u = c·asinh(ρ/c): (2c²/ρ⁴)·ρ/√(ρ² + c²)."""
    rho = math.hypot(x, y)
    return 2.0 * c * c / rho ** 4 * rho / math.sqrt(rho * rho + c * c)


def ellipse_circumference(a, b):
    """Perimeter of the ellipse with semi-axes a, b by adaptive quadrature."""
    value, _ = integrate.quad(lambda t: math.hypot(a * math.sin(t), b * math.cos(t)), 0.0, 2.0 * math.pi)
    return value


SCENARIOS = {
    'flat-plane': Scenario(
        name='flat-plane', metric='flat', chart=[-1.0, 1.0, -1.0, 1.0],
        boundary='constant', boundary_params={'value': 0.0},
        R_available=0.85, pairs=[[0.2, 0.4], [0.2, 0.8], [0.3, 0.6]],
        exact_u=lambda X, Y: np.zeros_like(X),
        distance=_euclidean,
        density=lambda x, y: 0.0,
        circle_length=lambda r: 2.0 * math.pi * r,
        slice=True, totally_geodesic=True,
    ),
    'tilted-plane': Scenario(
        name='tilted-plane', metric='flat', chart=[-1.0, 1.0, -1.0, 1.0],
        boundary='affine', boundary_params={'a': 0.0, 'b': 0.6, 'c': 0.0},
        R_available=0.7, pairs=[[0.15, 0.3], [0.2, 0.4], [0.2, 0.6]],
        exact_u=lambda X, Y: 0.6 * X,
        distance=_tilted,
        density=lambda x, y: 0.0,
        # the induced metric is flat; its circles are chart ellipses 0.64x² + y² = r²
        circle_length=lambda r: 2.0 * math.pi * r,
        chart_circle_length=lambda r: ellipse_circumference(r / 0.8, r),
        totally_geodesic=True,
    ),
    'catenoid-annulus': Scenario(
        name='catenoid-annulus', metric='flat', chart=[-3.0, 3.0, -3.0, 3.0],
        domain={'kind': 'annulus', 'center': [0.0, 0.0], 'r_inner': 0.5, 'r_outer': 3.0},
        boundary='radial_asinh', boundary_params={'c': 1.0, 'center': [0.0, 0.0]},
        center=[1.5, 0.0], R_available=0.55, pairs=[[0.2, 0.4], [0.1, 0.3], [0.2, 0.5]],
        exact_u=lambda X, Y: np.arcsinh(np.hypot(X, Y)),
        density=catenoid_density,
        residual_margin=0.75,
    ),
    'sphere-slice': Scenario(
        name='sphere-slice', metric='sphere', chart=[-1.5, 1.5, -1.5, 1.5],
        boundary='constant', boundary_params={'value': 0.7},
        R_available=1.1, pairs=[[0.3, 0.6], [0.4, 1.0], [0.5, 1.1]],
        exact_u=lambda X, Y: np.full_like(X, 0.7),
        distance=great_circle_distance,
        density=lambda x, y: 0.0,
        circle_length=lambda r: 2.0 * math.pi * math.sin(r),
        slice=True, totally_geodesic=True,
    ),
    'sphere-perturbed': Scenario(
        name='sphere-perturbed', metric='sphere', chart=[-1.5, 1.5, -1.5, 1.5],
        boundary='polynomial', boundary_params={'terms': [[0, 0, 0.7], [2, 0, 0.06], [0, 2, -0.06]]},
        R_available=1.0, pairs=[[0.3, 0.6], [0.3, 0.9], [0.4, 1.0]],
    ),
    'bump-metric-perturbed': Scenario(
        name='bump-metric-perturbed', metric='bump', metric_params={'a': 0.25}, chart=[-1.0, 1.0, -1.0, 1.0],
        boundary='polynomial', boundary_params={'terms': [[1, 1, 0.2]]},
        R_available=0.7, pairs=[[0.15, 0.3], [0.2, 0.4], [0.2, 0.6]],
    ),
}


def get_scenario(name):
    if name not in SCENARIOS:
        raise ConfigError(f"Unknown scenario '{name}', expected one of {sorted(SCENARIOS)}")
    return SCENARIOS[name]


def sweep_pairs(scenario, sweep):
    """
    (r, R) pairs of a sweep, in a fixed order.

    With sweep['r'] set, R runs over r·R_factors (fixed-r decay study);
    otherwise r runs over fractions·R_available and R over r·R_factors.
    """
    factors = [float(k) for k in sweep.get('R_factors', [1.5, 2.0, 3.0])]
    if sweep.get('r') is not None:
        radii = [float(sweep['r'])]
    else:
        available = float(sweep.get('R_available') or scenario.R_available)
        radii = [float(f) * available for f in sweep.get('fractions', [0.15, 0.25, 0.35])]
    pairs = [(r, k * r) for r in radii for k in factors]
    logger.debug(f"Sweep pairs for {scenario.name}: {pairs}")
    return pairs
