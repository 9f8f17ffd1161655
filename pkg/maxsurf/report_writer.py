#!/usr/bin/env python3
"""
Report and plot-data output.

Everything written here depends only on the computed data, so identical
configurations produce identical files.
"""

import csv
import json
import logging
from pathlib import Path

import numpy as np

from estimate_engine import REPORT_FIELDS

logger = logging.getLogger(__name__)

ESTIMATE_EXTRA_COLUMNS = ['tol_ineq', 'inequality_ok', 'psi_bound_ok', 'pointwise_ok', 'chain_ok', 'radius_bound_ok',
                          'psi_rhs_global', 'multi_component', 'lhs_oracle']


def _json_default(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, default=_json_default)
        f.write('\n')
    logger.info(f"Wrote {path}")
    return path


def write_estimates_csv(rows, path):
    """
    One row per (r, R) pair.

    Args:
        rows: EstimateReport.to_dict() dictionaries
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(REPORT_FIELDS) + ESTIMATE_EXTRA_COLUMNS
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(k)) for k in columns])
    logger.info(f"Wrote {len(rows)} estimate rows to {path}")
    return path


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return value


def write_table_csv(rows, path):
    """Rows of dicts sharing the keys of the first row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(rows[0].keys()) if rows else []
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(k)) for k in columns])
    return path


def write_geometry_csv(geom, path):
    """Per-node fields over the graph's domain."""
    grid = geom.grid
    X, Y = grid.node_coords()
    mask = grid.domain_mask
    I, J = np.nonzero(mask)
    columns = {
        'i': I, 'j': J, 'x': X[mask], 'y': Y[mask], 'u': geom.u[mask], 'theta': geom.theta[mask],
        'a_norm_sq': geom.a_norm_sq[mask], 'gauss_K': geom.gauss_K[mask], 'mean_H': geom.mean_H[mask],
        'kappa_M': geom.kappa_M[mask],
    }
    return _write_columns(columns, path)


def write_distance_csv(field, path):
    """Reached vertices of a distance field: vertex, x, y, d."""
    reached = np.flatnonzero(np.isfinite(field.d))
    coords = field.mesh.coords[reached]
    columns = {'vertex': reached, 'x': coords[:, 0], 'y': coords[:, 1], 'd': field.d[reached]}
    return _write_columns(columns, path)


def write_polyline_csv(disc, path):
    """Boundary components of a disc: component, x, y (closed loops repeat their first point)."""
    comp, xs, ys = [], [], []
    for k, line in enumerate(disc.polylines):
        comp.extend([k] * len(line))
        xs.extend(line[:, 0].tolist())
        ys.extend(line[:, 1].tolist())
    return _write_columns({'component': np.array(comp, dtype=int), 'x': np.array(xs), 'y': np.array(ys)}, path)


def _write_columns(columns, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(names)
        for row in zip(*(columns[n].tolist() for n in names)):
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def write_plot_data(out_dir, field=None, geom=None, center=None, rows=None):
    """
    Whitespace-separated data files for external plotting.

    distance_contours.dat: x y d
    a_norm_profile.dat:    x ‖A‖² along the grid row through the disc center
    slack_vs_R.dat:        R slack rhs (sorted by r, then R)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if field is not None:
        reached = np.isfinite(field.d)
        data = np.column_stack([field.mesh.coords[reached], field.d[reached]])
        np.savetxt(out_dir / 'distance_contours.dat', data, fmt='%.10e', header='x y d')
        written.append('distance_contours.dat')
    if geom is not None and center is not None:
        grid = geom.grid
        _, j = grid.nearest_node(center)
        keep = geom.report_mask[:, j]
        data = np.column_stack([grid.x[keep], geom.a_norm_sq[keep, j]])
        np.savetxt(out_dir / 'a_norm_profile.dat', data, fmt='%.10e', header='x a_norm_sq')
        written.append('a_norm_profile.dat')
    if rows:
        ordered = sorted(rows, key=lambda row: (row['r'], row['R']))
        data = np.array([[row['R'], row['slack'], row['rhs']] for row in ordered])
        np.savetxt(out_dir / 'slack_vs_R.dat', data, fmt='%.10e', header='R slack rhs')
        written.append('slack_vs_R.dat')
    logger.info(f"Plot data in {out_dir}: {', '.join(written) or 'none'}")
    return written
