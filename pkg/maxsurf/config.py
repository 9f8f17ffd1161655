#!/usr/bin/env python3
"""
Configuration management module.
"""

import copy
import logging
from pathlib import Path

import yaml

from boundary_data import BOUNDARY_CATALOG
from chart_metric import METRIC_CATALOG, MIN_NODES
from errors import ConfigError
from scenarios import get_scenario

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    'scenario': {'name': 'flat-plane'},
    'grid': {
        'nx': 65,
        'ny': None,
        'resolutions': [33, 65, 129],
        'residual_margin': 0.0,
    },
    'solver': {
        'max_newton_iters': 50,
        'residual_tol': 1e-10,
        'spacelike_guard': 1e-3,
        'min_damping': 2.0 ** -20,
    },
    'tolerances': {
        'curvature': 1e-10,         # K_M >= -tol
        'identity_exact': 1e-10,    # identity residuals on totally geodesic cases
        'maximal': 0.1,             # sup |H| admitted by the Gauss-equation check
        'totally_geodesic': 1e-10,  # lhs at or below this counts as zero
        'ineq_relative': 0.05,      # tol_ineq = ineq_relative * rhs
        'pointwise_factor': 10.0,   # tol_pt = pointwise_factor * sup |ΔΘ residual|
        'rigidity': 1e-6,           # sup ‖A‖ and sup |Θ + 1| thresholds
        'distance_relative': 0.02,  # fast marching vs closed form, at distances >= 10h
        'oracle_relative': 0.02,    # lhs vs adaptive quadrature
        'order_solution': 1.8,
        'order_distance': 0.9,
        # identity and Gauss-equation residual sups at residual_reference_nx, scaled by h² elsewhere
        'identity_residual': 1e-2,
        'gauss_residual': 2e-2,
        'residual_reference_nx': 257,
        'circle_relative': 0.02,    # L(r) vs closed form, flat M
        'circle_curved_relative': 0.05,  # L(r) vs closed form, curved M
    },
    'output': {
        'dir': 'results',
        'plot_data': True,
    },
    'sweep': {
        'r': None,
        'R_factors': [1.5, 2.0, 3.0],
        'fractions': [0.15, 0.25, 0.35],
    },
}


def load_config(config_path=None):
    """
    Load an experiment configuration from YAML.

    The named scenario fills the metric, boundary, chart, domain and disc
    sections and grid.residual_margin where the file leaves them out.

    Args:
        config_path: Path to config file (default: maxsurf/config.yaml)

    Returns:
        dict: Configuration dictionary
    """
    if config_path is None:
        config_path = Path(__file__).parent / 'config.yaml'

    config_file = Path(config_path)
    file_config = {}
    if config_file.exists():
        try:
            with open(config_file, 'r') as f:
                file_config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Failed to parse config file {config_file}: {e}") from e
        if not isinstance(file_config, dict):
            raise ConfigError(f"Config file {config_file} must hold a mapping, got {type(file_config).__name__}")
        logger.info(f"Loaded configuration from {config_file}")
    else:
        logger.info(f"Config file {config_file} not found, using defaults")

    return build_config(file_config)


def build_config(user=None):
    """Merge user sections over scenario defaults over DEFAULT_CONFIG."""
    user = user or {}
    name = (user.get('scenario') or {}).get('name', DEFAULT_CONFIG['scenario']['name'])
    scenario = get_scenario(name)
    config = _merge_config(copy.deepcopy(DEFAULT_CONFIG), scenario.to_config())
    return _merge_config(config, user)


def _merge_config(default, user):
    """Recursively merge user config into default config."""
    result = default.copy()
    for key, value in user.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _merge_config(result[key], value)
        else:
            result[key] = value
    return result


def chart_of(config):
    chart = config['chart']
    return (float(chart['x0']), float(chart['x1']), float(chart['y0']), float(chart['y1']))


def _numbers(value, count, what):
    if not isinstance(value, (list, tuple)) or len(value) != count:
        raise ConfigError(f"{what} must be a list of {count} numbers, got {value!r}")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what} must be a list of {count} numbers, got {value!r}") from e


def validate_config(config):
    """
    Check a merged configuration.

    Raises:
        ConfigError: on the first invalid entry
    """
    get_scenario(config['scenario']['name'])
    if config['metric']['name'] not in METRIC_CATALOG:
        raise ConfigError(f"Unknown metric '{config['metric']['name']}'")
    if config['boundary']['name'] not in BOUNDARY_CATALOG:
        raise ConfigError(f"Unknown boundary data '{config['boundary']['name']}'")

    x0, x1, y0, y1 = chart_of(config)
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"Chart ({x0}, {x1}, {y0}, {y1}) has zero measure")

    grid = config['grid']
    for key in ('nx', 'ny'):
        if grid.get(key) is not None and int(grid[key]) < MIN_NODES:
            raise ConfigError(f"grid.{key} must be at least {MIN_NODES}, got {grid[key]}")
    resolutions = [int(n) for n in grid.get('resolutions') or []]
    if any(n < MIN_NODES for n in resolutions):
        raise ConfigError(f"Every resolution must be at least {MIN_NODES}, got {resolutions}")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ConfigError(f"Resolutions must be strictly increasing, got {resolutions}")

    margin = grid.get('residual_margin') or 0.0
    if not isinstance(margin, (int, float)) or not 0.0 <= margin < 0.5 * min(x1 - x0, y1 - y0):
        raise ConfigError(f"grid.residual_margin must lie in [0, half the chart's shorter side), got {margin}")

    disc = config['disc']
    center = _numbers(disc.get('center'), 2, 'disc.center')
    if not (x0 <= center[0] <= x1 and y0 <= center[1] <= y1):
        raise ConfigError(f"disc.center {center} lies outside the chart ({x0}, {x1}, {y0}, {y1})")
    for pair in disc.get('pairs') or []:
        r, R = _numbers(pair, 2, 'disc.pairs entry')
        if not 0.0 < r < R:
            raise ConfigError(f"Disc radii must satisfy 0 < r < R, got {pair}")

    solver = config['solver']
    if not 0.0 < float(solver['spacelike_guard']) < 1.0:
        raise ConfigError(f"solver.spacelike_guard must lie in (0, 1), got {solver['spacelike_guard']}")
    if not float(solver['residual_tol']) > 0.0:
        raise ConfigError(f"solver.residual_tol must be positive, got {solver['residual_tol']}")

    sweep = config['sweep']
    if sweep.get('r') is not None and not float(sweep['r']) > 0.0:
        raise ConfigError(f"sweep.r must be positive, got {sweep['r']}")
    if any(float(k) <= 1.0 for k in sweep.get('R_factors', [])):
        raise ConfigError(f"sweep.R_factors must exceed 1, got {sweep['R_factors']}")
    return config
