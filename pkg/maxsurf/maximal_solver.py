#!/usr/bin/env python3
"""
Maximal graph solver.

Solves Div(Du/√(1−|Du|²)) = 0 with Dirichlet data by maximizing the discrete
area A(u) = Σ_cells ∫ e^{2λ}√(1 − e^{−2λ}|∇u|²) dx of the bilinear
interpolant, integrated with the 2×2 Gauss rule per cell. Newton steps use
the exact Hessian of A, with backtracking so every accepted iterate keeps
1 − |Du|²_g ≥ ε at all quadrature points.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import spsolve

from chart_metric import make_metric
from errors import ChartDomainError, SolverFailure, SpacelikeBreakdown

logger = logging.getLogger(__name__)

_GAUSS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
_MIN_CONTINUATION_STEP = 1.0 / 64.0


@dataclass
class SolverSettings:
    max_newton_iters: int = 50
    residual_tol: float = 1e-10
    spacelike_guard: float = 1e-3
    # backtracking halves the step down to this factor
    min_damping: float = 2.0 ** -20

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ChartDomainError(f"residual_tol must be positive, got {self.residual_tol}")
        if not 0.0 < self.spacelike_guard < 1.0:
            raise ChartDomainError(f"spacelike_guard must lie in (0, 1), got {self.spacelike_guard}")

    @classmethod
    def from_config(cls, config):
        solver = config.get('solver', {})
        return cls(
            max_newton_iters=int(solver.get('max_newton_iters', 50)),
            residual_tol=float(solver.get('residual_tol', 1e-10)),
            spacelike_guard=float(solver.get('spacelike_guard', 1e-3)),
            min_damping=float(solver.get('min_damping', 2.0 ** -20)),
        )


@dataclass
class SolverStats:
    iterations: int = 0
    final_residual: float = float('nan')
    spacelike_margin: float = float('nan')
    continuation_steps: List[float] = field(default_factory=list)
    residual_history: List[float] = field(default_factory=list)
    area_history: List[float] = field(default_factory=list)
    damping_history: List[float] = field(default_factory=list)
    guard_history: List[float] = field(default_factory=list)

    def to_dict(self):
        return {
            'iterations': self.iterations,
            'final_residual': self.final_residual,
            'spacelike_margin': self.spacelike_margin,
            'continuation_steps': list(self.continuation_steps),
            'residual_history': list(self.residual_history),
            'area_history': list(self.area_history),
            'damping_history': list(self.damping_history),
        }


@dataclass
class GraphFunction:
    """Discrete spacelike graph u on a grid, with cached chart gradient."""
    grid: object
    u: np.ndarray
    grad_u: np.ndarray
    spacelike_margin: float
    metric_name: str = ''
    stats: Optional[SolverStats] = None


def node_gradient(u, grid):
    """Central-difference chart gradient, shape (2, nx, ny)."""
    ux, uy = np.gradient(u, grid.hx, grid.hy, edge_order=2)
    return np.stack([ux, uy])


def make_graph(spec, grid, u, stats=None):
    """Wrap nodal values as a GraphFunction (gradient and margin computed here)."""
    u = np.asarray(u, dtype=float).reshape(grid.nx, grid.ny)
    grad_u = node_gradient(u, grid)
    X, Y = grid.node_coords()
    s = np.exp(-2.0 * spec.lam(X, Y)) * (grad_u[0] ** 2 + grad_u[1] ** 2)
    margin = float(np.min(1.0 - s[grid.active_mask]))
    return GraphFunction(grid, u, grad_u, margin, spec.name, stats)


class CellQuadrature:
    """
    Per-cell Gauss-point data of the discrete area functional.

    Only cells touching an unknown node are kept; the remaining cells add a
    constant to A and are never evaluated (their data may be non-spacelike,
    e.g. inside an annulus hole).
    """

    def __init__(self, spec, grid):
        self.grid = grid
        self.n = grid.nx * grid.ny
        nx, ny = grid.nx, grid.ny
        hx, hy = grid.hx, grid.hy
        I, J = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing='ij')
        I, J = I.ravel(), J.ravel()
        # local order: (i,j), (i+1,j), (i,j+1), (i+1,j+1)
        nodes = np.stack([I * ny + J, (I + 1) * ny + J, I * ny + J + 1, (I + 1) * ny + J + 1], axis=1)
        live = grid.active_mask.ravel()[nodes].any(axis=1)
        self.nodes = nodes[live]
        I, J = I[live], J[live]
        self.weight = hx * hy / 4.0

        self.points = []
        x0, y0 = grid.chart[0], grid.chart[2]
        for s in _GAUSS:
            for t in _GAUSS:
                bx = np.array([-(1.0 - t), 1.0 - t, -t, t]) / hx
                by = np.array([-(1.0 - s), -s, 1.0 - s, s]) / hy
                lam = spec.lam(x0 + (I + s) * hx, y0 + (J + t) * hy)
                self.points.append((bx, by, np.exp(-2.0 * lam), np.exp(2.0 * lam)))

        X, Y = grid.node_coords()
        self.mass = (np.exp(2.0 * spec.lam(X, Y)) * hx * hy).ravel()
        logger.debug(f"Quadrature over {len(self.nodes)} live cells")

    def _state(self, u_flat):
        U = u_flat[self.nodes]
        for bx, by, em2l, e2l in self.points:
            px, py = U @ bx, U @ by
            s = em2l * (px * px + py * py)
            yield bx, by, em2l, e2l, px, py, s

    def min_margin(self, u_flat):
        return min(float(np.min(1.0 - s)) for *_, s in self._state(u_flat))

    def area(self, u_flat):
        total = 0.0
        for *_, e2l, px, py, s in self._state(u_flat):
            total += float(np.sum(e2l * np.sqrt(1.0 - s)))
        return total * self.weight

    def gradient(self, u_flat):
        G = np.zeros(self.n)
        for bx, by, em2l, e2l, px, py, s in self._state(u_flat):
            W = np.sqrt(1.0 - s)
            local = -(px[:, None] * bx[None, :] + py[:, None] * by[None, :]) / W[:, None]
            G += np.bincount(self.nodes.ravel(), weights=local.ravel(), minlength=self.n)
        return G * self.weight

    def hessian(self, u_flat):
        local = np.zeros((len(self.nodes), 4, 4))
        for bx, by, em2l, e2l, px, py, s in self._state(u_flat):
            W = np.sqrt(1.0 - s)
            D = px[:, None] * bx[None, :] + py[:, None] * by[None, :]
            K0 = np.outer(bx, bx) + np.outer(by, by)
            local -= K0[None, :, :] / W[:, None, None]
            local -= (em2l / W ** 3)[:, None, None] * D[:, :, None] * D[:, None, :]
        rows = np.repeat(self.nodes, 4, axis=1).ravel()
        cols = np.tile(self.nodes, (1, 4)).ravel()
        H = sparse.coo_matrix((local.ravel() * self.weight, (rows, cols)), shape=(self.n, self.n))
        return H.tocsr()

    def divergence(self, u_flat):
        """Nodal Div(Du/W) consistent with the area gradient (lumped mass)."""
        return self.gradient(u_flat) / self.mass


def discrete_area(u, spec, grid):
    """Discrete area of the graph over the cells touching unknown nodes."""
    return CellQuadrature(spec, grid).area(np.asarray(u, dtype=float).ravel())


def harmonic_extension(grid, boundary, quad=None):
    """
    Discrete harmonic extension of the non-active values of `boundary`.

    Uses the Hessian of the area at u = 0, which is minus the Q1 stiffness
    matrix regardless of λ.
    """
    quad = quad or _stiffness_quadrature(grid)
    b = np.asarray(boundary, dtype=float).ravel().copy()
    active = grid.active_mask.ravel()
    a_idx = np.flatnonzero(active)
    K = quad.hessian(np.zeros(quad.n))
    b_act = b.copy()
    b_act[a_idx] = 0.0
    rhs = -(K @ b_act)[a_idx]
    b[a_idx] = spsolve(K[a_idx][:, a_idx].tocsc(), rhs)
    return b.reshape(grid.nx, grid.ny)


def _stiffness_quadrature(grid):
    return CellQuadrature(make_metric('flat', chart=grid.chart), grid)


def _newton(quad, u, a_idx, settings, stats):
    guard = settings.spacelike_guard
    for it in range(settings.max_newton_iters + 1):
        G = quad.gradient(u)
        residual = float(np.max(np.abs(G[a_idx] / quad.mass[a_idx])))
        area = quad.area(u)
        stats.residual_history.append(residual)
        stats.area_history.append(area)
        logger.debug(f"Newton {it}: residual={residual:.3e} area={area:.12g}")
        if residual <= settings.residual_tol:
            stats.iterations += it
            stats.final_residual = residual
            return u
        if it == settings.max_newton_iters:
            break

        H = quad.hessian(u)[a_idx][:, a_idx]
        delta = spsolve(H.tocsc(), -G[a_idx])
        t = 1.0
        while True:
            trial = u.copy()
            trial[a_idx] += t * delta
            margin = quad.min_margin(trial)
            if margin >= guard and quad.area(trial) >= area - 1e-12 * max(1.0, abs(area)):
                break
            t *= 0.5
            if t < settings.min_damping:
                if margin < guard:
                    raise SpacelikeBreakdown(
                        f"Newton iterate left the spacelike set (margin {margin:.3e}); "
                        f"boundary data may be too steep", margin)
                raise SolverFailure(f"Line search stalled at residual {residual:.3e}", residual, it)
        stats.damping_history.append(t)
        stats.guard_history.append(margin)
        u = trial

    stats.iterations += settings.max_newton_iters
    stats.final_residual = residual
    raise SolverFailure(
        f"No convergence after {settings.max_newton_iters} Newton iterations (residual {residual:.3e})",
        residual, settings.max_newton_iters)


def solve_maximal_graph(spec, grid, boundary, settings=None):
    """
    Solve the maximal surface equation with Dirichlet data.

    Args:
        spec: MetricSpec of M
        grid: Grid (annular domains carry data on all non-active nodes)
        boundary: Array (nx, ny); its non-active entries are the Dirichlet data
        settings: SolverSettings

    Returns:
        GraphFunction with solver statistics attached
    """
    settings = settings or SolverSettings()
    quad = CellQuadrature(spec, grid)
    b = np.asarray(boundary, dtype=float).ravel()
    active = grid.active_mask.ravel()
    a_idx = np.flatnonzero(active)
    stats = SolverStats()

    u = harmonic_extension(grid, b, quad=quad).ravel()
    mean = float(np.mean(b[~active]))
    guard = settings.spacelike_guard

    # margin of m + τ(u − m) is 1 − τ²·s_max, so the admissible τ is explicit
    s_max = 1.0 - quad.min_margin(u)
    tau = 1.0
    if s_max > 1.0 - guard:
        tau = 0.95 * np.sqrt((1.0 - guard) / s_max)
        if tau < _MIN_CONTINUATION_STEP:
            raise SpacelikeBreakdown(
                f"Harmonic extension too steep (max |Du|² = {s_max:.3f}); no spacelike start", 1.0 - s_max)
        u = mean + tau * (u - mean)
        logger.info(f"Boundary data scaled to τ={tau:.4f} for a spacelike start")
    stats.continuation_steps.append(tau)

    u = _newton(quad, u, a_idx, settings, stats)
    while tau < 1.0:
        step = 1.0 - tau
        while True:
            new_tau = tau + step
            trial = mean + (new_tau / tau) * (u - mean)
            if quad.min_margin(trial) >= guard:
                break
            step *= 0.5
            if step < _MIN_CONTINUATION_STEP:
                raise SpacelikeBreakdown(
                    f"Continuation stalled at τ={tau:.4f}; boundary data too steep", quad.min_margin(trial))
        trial[~active] = mean + new_tau * (b[~active] - mean)
        u = _newton(quad, trial, a_idx, settings, stats)
        tau = new_tau
        stats.continuation_steps.append(tau)
        logger.debug(f"Continuation reached τ={tau:.4f}")

    graph = make_graph(spec, grid, u, stats)
    stats.spacelike_margin = graph.spacelike_margin
    logger.info(f"Maximal graph solved: {stats.iterations} Newton steps, residual {stats.final_residual:.3e}, "
                f"margin {graph.spacelike_margin:.4f}")
    return graph


def pde_residual(g, spec):
    """Sup-norm over unknown nodes of the discrete Div(Du/√(1−|Du|²))."""
    quad = CellQuadrature(spec, g.grid)
    div = quad.divergence(g.u.ravel())
    return float(np.max(np.abs(div[g.grid.active_mask.ravel()])))


def mean_curvature_of_graph(g, spec):
    """Per-node H = Div(Du/√(1−|Du|²))/2; NaN off the unknown nodes."""
    quad = CellQuadrature(spec, g.grid)
    H = 0.5 * quad.divergence(g.u.ravel())
    H[~g.grid.active_mask.ravel()] = np.nan
    return H.reshape(g.grid.nx, g.grid.ny)
