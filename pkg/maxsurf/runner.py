#!/usr/bin/env python3
"""
Experiment runner: scenario -> solve -> geometry -> geodesics -> estimates.

Each stage reports a result dict ({"success", "stage", "message"/"error"});
the first failing stage ends the run. Checked properties are collected by
name and decide the exit status.
"""

import copy
import logging
import math
import time
from pathlib import Path

import numpy as np
import psutil

import report_writer
from boundary_data import boundary_values
from chart_metric import make_grid, make_metric, validate_nonnegative_curvature
from config import chart_of, validate_config
from errors import MaxsurfError, NotMaximalError
from estimate_engine import (CURVED, NONSLICE, SLICE, disc_quadrature_oracle, pointwise_margin_check,
                             rigidity_asymptotics, rigidity_probe, estimate_check)
from geodesic_engine import disc_extract, geodesic_distance, triangle_consistency, triangulate
from maximal_solver import SolverSettings, pde_residual, solve_maximal_graph
from scenarios import get_scenario, sweep_pairs
from surface_geometry import compute_geometry, gauss_curvature_sigma, identity_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_STAGE_ERROR = 2

IDENTITY_NAMES = ['gradient', 'gradient_norm', 'laplacian', 'tangent_norm', 'square']

# errors at rounding level carry no convergence order
ORDER_FLOOR = 1e-12

# circle-length oracles apply once r spans this many mesh edges
CIRCLE_EDGES = 5.0


class StageAborted(Exception):
    def __init__(self, result):
        super().__init__(result.get('error', ''))
        self.result = result


def observed_order(e_coarse, e_fine, h_coarse, h_fine):
    """log(e_coarse/e_fine)/log(h_coarse/h_fine); NaN when either error is at rounding level."""
    if not (e_coarse > ORDER_FLOOR and e_fine > ORDER_FLOOR):
        return float('nan')
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


class ExperimentRunner:
    """Runs one configured scenario through the pipeline."""

    def __init__(self, config, out_dir=None):
        """
        Args:
            config: Merged configuration dictionary (see config.load_config)
            out_dir: Output directory (default: config['output']['dir'])
        """
        self.config = validate_config(config)
        self.scenario = get_scenario(config['scenario']['name'])
        self.out_dir = Path(out_dir or config['output']['dir'])
        self.tol = {k: float(v) for k, v in config['tolerances'].items()}
        self.stages = []
        self.checks = {}
        self.timings = {}
        self.memory_mb = {}
        # closed forms apply only while the scenario's own data is in use
        defaults = self.scenario.to_config()
        self.oracles_valid = all(config[k] == defaults[k] for k in ('metric', 'boundary', 'domain'))
        self._process = psutil.Process()

    # -- stage plumbing --------------------------------------------------

    def _stage(self, name, func, *args, **kwargs):
        start = time.perf_counter()
        try:
            value = func(*args, **kwargs)
            result = {"success": True, "stage": name, "message": f"{name} completed"}
        except MaxsurfError as e:
            logger.error(f"Stage '{name}' failed: {e}", exc_info=True)
            result = {"success": False, "stage": name, "error": f"{type(e).__name__}: {e}"}
            value = None
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start
            self.memory_mb[name] = self._process.memory_info().rss / 2.0 ** 20
        self.stages.append(result)
        if not result['success']:
            raise StageAborted(result)
        return value

    def _check(self, name, passed):
        passed = bool(passed)
        self.checks[name] = self.checks.get(name, True) and passed
        if not passed:
            logger.warning(f"Check failed: {name}")
        return passed

    def _exit_code(self):
        if any(not s['success'] for s in self.stages):
            return EXIT_STAGE_ERROR
        if not all(self.checks.values()):
            return EXIT_CHECK_FAILED
        return EXIT_OK

    # -- pipeline pieces -------------------------------------------------

    def _build(self, nx, ny=None):
        cfg = self.config
        spec = make_metric(cfg['metric']['name'], cfg['metric'].get('params'), chart_of(cfg))
        grid = make_grid(chart_of(cfg), nx, ny, cfg['domain'], cfg['grid'].get('residual_margin') or 0.0)
        return spec, grid

    def _solve(self, nx, ny=None):
        spec, grid = self._stage('metric', self._build, nx, ny)
        ok, k_min = validate_nonnegative_curvature(spec, grid, float(self.tol['curvature']))
        self._check('curvature_nonnegative', ok)

        cfg = self.config
        boundary = boundary_values(grid, cfg['boundary']['name'], cfg['boundary'].get('params'))
        settings = SolverSettings.from_config(cfg)
        g = self._stage('solve', solve_maximal_graph, spec, grid, boundary, settings)
        solver = g.stats.to_dict()
        solver['pde_residual'] = pde_residual(g, spec)
        solver['min_curvature_M'] = k_min
        if self.oracles_valid and self.scenario.exact_u is not None:
            X, Y = grid.node_coords()
            error = np.abs(g.u - self.scenario.exact_u(X, Y))[grid.active_mask]
            solver['solution_error'] = float(np.max(error))
        return spec, grid, g, solver

    def _geometry(self, g, spec, nodes=None):
        geom = self._stage('geometry', compute_geometry, g, spec)
        identities = identity_checks(geom, spec, nodes)
        try:
            gauss = gauss_curvature_sigma(geom, spec, float(self.tol['maximal']), nodes)
            gauss_sup = gauss['sup_difference']
        except NotMaximalError as e:
            logger.warning(f"Gauss-equation cross-check skipped: {e}")
            gauss_sup = None
        self._check('maximal', gauss_sup is not None)
        self._check('theta_arctan', identities['theta_arctan_ok'])
        if self.scenario.totally_geodesic and self.oracles_valid:
            exact = float(self.tol['identity_exact'])
            self._check('identities_exact', all(identities[k] <= exact for k in IDENTITY_NAMES))
        return geom, identities, gauss_sup

    def _distances(self, geom, g, spec, R_max, check_oracle=True):
        mesh = self._stage('mesh', triangulate, g, geom, spec)
        grid = g.grid
        node = grid.nearest_node(self.config['disc']['center'])
        p = mesh.vertex_index(node)
        stop = R_max + 3.0 * mesh.max_edge if R_max else None
        field = self._stage('distance', geodesic_distance, mesh, p, stop)
        summary = {
            'source': int(p),
            'source_chart': mesh.coords[p].tolist(),
            'triangle_updates': field.triangle_updates,
            'fallbacks': field.fallbacks,
            'consistency': triangle_consistency(field),
        }
        self._check('distance_consistency', summary['consistency'] <= 1e-12)
        if self.oracles_valid and self.scenario.distance is not None:
            exact = self.scenario.distance(mesh.coords[p], mesh.coords[:, 0], mesh.coords[:, 1])
            far = np.isfinite(field.d) & (exact >= 10.0 * max(grid.hx, grid.hy))
            if far.any():
                summary['max_abs_error'] = float(np.max(np.abs(field.d - exact)[np.isfinite(field.d)]))
                summary['max_rel_error'] = float(np.max(np.abs(field.d[far] - exact[far]) / exact[far]))
                if check_oracle:
                    self._check('distance_oracle', summary['max_rel_error'] <= float(self.tol['distance_relative']))
        return mesh, p, field, summary

    def _estimates(self, geom, mesh, p, field, pairs):
        rows = []
        reports = []
        for r, R in pairs:
            report = self._stage('estimate', estimate_check, geom, mesh, p, r, R, self.tol, field)
            extras = report.extras
            self._check('inequality', extras['inequality_ok'])
            self._check('psi_bound', extras['psi_bound_ok'])
            self._check('pointwise_inequality', extras['pointwise_ok'])
            self._check('proof_chain', extras['chain_ok'])
            self._check('radius_bound', extras['radius_bound_ok'])
            disc = disc_extract(field, r)
            if self.oracles_valid and self.scenario.density is not None:
                oracle = disc_quadrature_oracle(disc, self.scenario.density)
                extras['lhs_oracle'] = oracle
                if self.scenario.totally_geodesic:
                    self._check('lhs_zero', report.lhs <= float(self.tol['totally_geodesic']))
                else:
                    self._check('lhs_oracle', abs(report.lhs - oracle) <= float(self.tol['oracle_relative']) * oracle)
            if self.oracles_valid:
                self._circle_oracles(report, disc, mesh)
            reports.append(report)
            rows.append(report.to_dict())
        return reports, rows, disc if pairs else None

    def _circle_oracles(self, report, disc, mesh):
        """Intrinsic circle length (and chart ellipse length) against closed forms, once r spans 5 edges."""
        extras = report.extras
        resolved = report.r >= CIRCLE_EDGES * mesh.max_edge
        flat = self.config['metric']['name'] == 'flat'
        tol = float(self.tol['circle_relative' if flat else 'circle_curved_relative'])
        if self.scenario.circle_length is not None:
            expected = self.scenario.circle_length(report.r)
            extras['L_oracle'] = expected
            extras['L_rel_error'] = abs(report.L_r - expected) / expected
            if resolved:
                self._check('circle_length_oracle', extras['L_rel_error'] <= tol)
        if self.scenario.chart_circle_length is not None:
            expected = self.scenario.chart_circle_length(report.r)
            extras['chart_L_oracle'] = expected
            extras['chart_L_rel_error'] = abs(disc.chart_length - expected) / expected
            if resolved:
                self._check('chart_circle_oracle', extras['chart_L_rel_error'] <= tol)

    def _residual_bounds(self, table):
        """Identity (i)-(iv) and Gauss-equation sups against C·h², C fixed at residual_reference_nx."""
        x0, x1, y0, y1 = chart_of(self.config)
        h_ref = max(x1 - x0, y1 - y0) / (self.tol['residual_reference_nx'] - 1.0)
        for row in table:
            scale = (row['h'] / h_ref) ** 2
            bound = self.tol['identity_residual'] * scale
            row['identity_bound'] = bound
            self._check('identity_residual', all(row[f'identity_{k}'] <= bound for k in IDENTITY_NAMES[:4]))
            if row['gauss_difference'] is not None:
                row['gauss_bound'] = self.tol['gauss_residual'] * scale
                self._check('gauss_residual', row['gauss_difference'] <= row['gauss_bound'])

    def _pointwise_nodes(self, geom, spec):
        margin = pointwise_margin_check(geom)
        if margin['curvature_ok']:
            self._check('pointwise_nodes', margin['node_min_margin'] >= 0.0)
        if margin['strict_min_margin'] is not None:
            self._check('pointwise_strict', margin['strict_min_margin'] > 0.0)
        if spec.name == 'flat':
            self._check('pointwise_flat_equality', abs(margin['node_min_margin']) <= 1e-12)
        return margin

    def _rigidity(self, geom, spec):
        probe = rigidity_probe(geom, spec, float(self.tol['rigidity']))
        self._check('rigidity_consistent', probe['consistent'])
        if self.oracles_valid:
            expected = SLICE if self.scenario.slice else NONSLICE if self.scenario.totally_geodesic else CURVED
            probe['expected'] = expected
            self._check('rigidity_classification', probe['classification'] == expected)
        return probe

    # -- commands --------------------------------------------------------

    def _pipeline(self, pairs, command):
        cfg = self.config
        report = {'command': command, 'scenario': self.scenario.name, 'config': copy.deepcopy(cfg),
                  'resolution': [int(cfg['grid']['nx']), int(cfg['grid'].get('ny') or cfg['grid']['nx'])]}
        self.out_dir.mkdir(parents=True, exist_ok=True)
        try:
            spec, grid, g, report['solver'] = self._solve(cfg['grid']['nx'], cfg['grid'].get('ny'))
            geom, report['identities'], report['gauss_sup_difference'] = self._geometry(g, spec)
            report['pointwise'] = self._pointwise_nodes(geom, spec)
            report['rigidity'] = self._rigidity(geom, spec)
            R_max = max((R for _, R in pairs), default=None)
            mesh, p, field, report['distance'] = self._distances(geom, g, spec, R_max)
            reports, rows, disc = self._estimates(geom, mesh, p, field, pairs)
            report['estimates'] = rows
            if len({rep.R for rep in reports}) > 1:
                asymptotics = rigidity_asymptotics(reports, lhs_floor=float(self.tol['totally_geodesic']))
                report['asymptotics'] = {str(r): v for r, v in asymptotics.items()}
                for v in asymptotics.values():
                    self._check('asymptotic_decay', v['constant_ok'] and v['lhs_ok'])
                    if self.scenario.totally_geodesic and self.oracles_valid:
                        self._check('asymptotic_lhs_zero', v['lhs_zero'])
            self._write_outputs(command, geom, field, disc, rows)
        except StageAborted as e:
            report['failed_stage'] = e.result
        return self._finish(report, command)

    def _write_outputs(self, command, geom, field, disc, rows):
        name = 'sweep.csv' if command == 'sweep' else 'estimates.csv'
        report_writer.write_estimates_csv(rows, self.out_dir / name)
        report_writer.write_geometry_csv(geom, self.out_dir / 'geometry.csv')
        report_writer.write_distance_csv(field, self.out_dir / 'distance.csv')
        if disc is not None:
            report_writer.write_polyline_csv(disc, self.out_dir / 'disc_boundary.csv')
        if self.config['output'].get('plot_data', True):
            report_writer.write_plot_data(self.out_dir, field=field, geom=geom,
                                          center=self.config['disc']['center'], rows=rows)

    def _finish(self, report, command):
        report['stages'] = self.stages
        report['checks'] = dict(sorted(self.checks.items()))
        report['exit_code'] = self._exit_code()
        report_writer.write_json(report, self.out_dir / f'{command}_report.json')
        # wall-clock data goes to its own file so the report stays reproducible
        report_writer.write_json({'timings': self.timings, 'memory_mb': self.memory_mb},
                                 self.out_dir / f'{command}_timings.json')
        report['timings'] = dict(self.timings)
        report['memory_mb'] = dict(self.memory_mb)
        level = logging.INFO if report['exit_code'] == EXIT_OK else logging.WARNING
        logger.log(level, f"{command} on {self.scenario.name}: exit code {report['exit_code']}, "
                          f"{sum(self.checks.values())}/{len(self.checks)} checks passed")
        return report

    def run(self):
        """Full pipeline over the configured (r, R) pairs; returns the RunReport dict."""
        pairs = [tuple(float(v) for v in pair) for pair in self.config['disc']['pairs']]
        return self._pipeline(pairs, 'run')

    def sweep(self):
        """Pipeline over the sweep's (r, R) grid; one CSV row per pair."""
        pairs = sweep_pairs(self.scenario, self.config['sweep'])
        return self._pipeline(pairs, 'sweep')

    def converge(self):
        """
        Errors per resolution and observed orders between consecutive ones.

        Per resolution: solver sup-error against the closed form, identity
        residual sups, Gauss cross-check sup and maximal distance error where
        a closed-form distance exists. Residual sups are taken over the nodes
        shared with the coarsest resolution when the grids nest. Curved
        scenarios with a closed form also check residuals against C·h² and
        the last pair of orders.
        """
        cfg = self.config
        report = {'command': 'converge', 'scenario': self.scenario.name, 'config': copy.deepcopy(cfg)}
        self.out_dir.mkdir(parents=True, exist_ok=True)
        table = []
        try:
            resolutions = [int(n) for n in cfg['grid']['resolutions'] or []]
            for nx in resolutions:
                spec, grid, g, solver = self._solve(nx)
                # sups over the nodes every resolution shares, so the measured set stays put
                shared = grid.shared_nodes(resolutions[0])
                geom, identities, gauss_sup = self._geometry(g, spec, shared)
                row = {'nx': int(nx), 'h': max(grid.hx, grid.hy), 'newton_iterations': solver['iterations'],
                       'shared_nodes': shared is not None, 'solution_error': solver.get('solution_error')}
                row.update({f'identity_{k}': identities[k] for k in IDENTITY_NAMES})
                row['gauss_difference'] = gauss_sup
                reach = 1.05 * self.scenario.R_available if self.oracles_valid else None
                _, _, _, distance = self._distances(geom, g, spec, reach, check_oracle=False)
                row['distance_error'] = distance.get('max_abs_error')
                table.append(row)
        except StageAborted as e:
            report['failed_stage'] = e.result

        orders = []
        keys = ['solution_error', 'identity_gradient', 'identity_gradient_norm', 'identity_laplacian',
                'identity_tangent_norm', 'gauss_difference', 'distance_error']
        for coarse, fine in zip(table, table[1:]):
            entry = {'nx': [coarse['nx'], fine['nx']]}
            for k in keys:
                if coarse.get(k) is not None and fine.get(k) is not None:
                    entry[k] = observed_order(coarse[k], fine[k], coarse['h'], fine['h'])
            orders.append(entry)
        closed_form = self.oracles_valid and self.scenario.exact_u is not None and not self.scenario.totally_geodesic
        if closed_form:
            self._residual_bounds(table)
        if orders and closed_form:
            last = orders[-1]
            for k in keys[:-1]:
                if k in last and not math.isnan(last[k]):
                    self._check(f'order_{k}', last[k] >= float(self.tol['order_solution']))
        if orders and self.oracles_valid and 'distance_error' in orders[-1]:
            value = orders[-1]['distance_error']
            if not math.isnan(value):
                self._check('order_distance_error', value >= float(self.tol['order_distance']))

        report['table'] = table
        report['orders'] = orders
        if table:
            report_writer.write_table_csv(table, self.out_dir / 'convergence.csv')
        return self._finish(report, 'converge')

