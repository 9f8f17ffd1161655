#!/usr/bin/env python3
"""
Pointwise Lorentzian geometry of a discrete graph in M² × ℝ₁.

All derivatives are second-order central differences (np.gradient with
edge_order=2). The future-pointing unit normal of the graph t = u(x) is
N = (Du♯ + ∂_t)/W with W = √(1 − |Du|²_g), so Θ = ⟨N, ∂_t⟩ = −1/W.
"""

import logging
from dataclasses import dataclass

import numpy as np

from errors import NonSpacelikeError, NotMaximalError

logger = logging.getLogger(__name__)

REPORT_DEPTH = 2


@dataclass
class SurfaceGeometry:
    """Per-node fields, arrays of shape (nx, ny) unless noted."""
    grid: object
    u: np.ndarray
    induced_g: np.ndarray      # (3, nx, ny): g11, g12, g22
    induced_g_inv: np.ndarray  # (3, nx, ny)
    det_g: np.ndarray
    theta: np.ndarray
    second_form: np.ndarray    # (3, nx, ny): h11, h12, h22
    shape_op: np.ndarray       # (2, 2, nx, ny): A^i_j
    a_norm_sq: np.ndarray
    gauss_K: np.ndarray
    mean_H: np.ndarray
    psi: np.ndarray
    t_top: np.ndarray          # (2, nx, ny): chart components of ∂_t^⊤
    t_top_norm_sq: np.ndarray
    kappa_M: np.ndarray

    @property
    def report_mask(self):
        """Domain nodes two rings from the boundary with finite fields."""
        return self.grid.interior_mask(REPORT_DEPTH) & np.isfinite(self.theta)

    def residual_mask(self, nodes=None):
        """Report nodes at least grid.residual_margin inside the domain, optionally restricted to `nodes`."""
        mask = self.grid.residual_mask(REPORT_DEPTH) & np.isfinite(self.theta)
        return mask if nodes is None else mask & nodes


def _grad(f, grid):
    fx, fy = np.gradient(f, grid.hx, grid.hy, edge_order=2)
    return fx, fy


def _chart_fields(g, spec):
    grid = g.grid
    X, Y = grid.node_coords()
    lam = spec.lam(X, Y)
    ux, uy = g.grad_u
    s = np.exp(-2.0 * lam) * (ux * ux + uy * uy)
    w2 = 1.0 - s
    bad = w2 <= 0.0
    if np.any(bad & grid.domain_mask):
        i, j = np.argwhere(bad & grid.domain_mask)[0]
        raise NonSpacelikeError(f"Graph is not spacelike at node ({i}, {j}): |Du|² = {s[i, j]:.4f}")
    w2 = np.where(bad, np.nan, w2)
    return X, Y, lam, ux, uy, w2


def induced_metric(g, spec):
    """
    Induced metric g_M − du⊗du in chart components.

    Returns:
        np.ndarray: (3, nx, ny) stack of g11, g12, g22
    """
    X, Y, lam, ux, uy, w2 = _chart_fields(g, spec)
    e2l = np.exp(2.0 * lam)
    return np.stack([e2l - ux * ux, -ux * uy, e2l - uy * uy])


def gauss_map_theta(g, spec):
    """Θ = ⟨N, ∂_t⟩ = −1/√(1 − |Du|²_g) of the future-pointing normal."""
    *_, w2 = _chart_fields(g, spec)
    return -1.0 / np.sqrt(w2)


def shape_operator(g, spec):
    """
    Shape operator A^i_j = g^{ik} h_kj with h_kj = ⟨∇̄_{e_k} e_j, N⟩.

    For e_j = ∂_j + u_j ∂_t, ∇̄_{e_k} e_j = Γ^m_kj ∂_m + u_kj ∂_t, so
    h_kj = (Γ^m_kj u_m − u_kj)/W with the conformal Christoffel symbols.

    Returns:
        tuple: (A of shape (2, 2, nx, ny), h of shape (3, nx, ny))
    """
    grid = g.grid
    X, Y, lam, ux, uy, w2 = _chart_fields(g, spec)
    W = np.sqrt(w2)
    lx, ly = spec.lam_x(X, Y), spec.lam_y(X, Y)
    uxx, uxy = _grad(ux, grid)
    uyx, uyy = _grad(uy, grid)
    uxy = 0.5 * (uxy + uyx)

    h11 = (lx * ux - ly * uy - uxx) / W
    h12 = (ly * ux + lx * uy - uxy) / W
    h22 = (-lx * ux + ly * uy - uyy) / W

    gi11, gi12, gi22 = _inverse(induced_metric(g, spec))
    A = np.empty((2, 2) + ux.shape)
    A[0, 0] = gi11 * h11 + gi12 * h12
    A[0, 1] = gi11 * h12 + gi12 * h22
    A[1, 0] = gi12 * h11 + gi22 * h12
    A[1, 1] = gi12 * h12 + gi22 * h22
    return A, np.stack([h11, h12, h22])


def _inverse(metric):
    g11, g12, g22 = metric
    det = g11 * g22 - g12 * g12
    return np.stack([g22 / det, -g12 / det, g11 / det])


def a_norm_sq(geom):
    """‖A‖² = tr(A²), from the stored shape operator."""
    A = geom.shape_op
    return A[0, 0] ** 2 + 2.0 * A[0, 1] * A[1, 0] + A[1, 1] ** 2


def brioschi_curvature(metric, grid):
    """Intrinsic Gaussian curvature of E dx² + 2F dxdy + G dy² (Brioschi formula)."""
    E, F, G = metric
    E_u, E_v = _grad(E, grid)
    F_u, F_v = _grad(F, grid)
    G_u, G_v = _grad(G, grid)
    _, E_vv = _grad(E_v, grid)
    _, F_uv = _grad(F_u, grid)
    G_uu, _ = _grad(G_u, grid)

    M1 = np.stack([
        np.stack([-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v], axis=-1),
        np.stack([F_v - 0.5 * G_u, E, F], axis=-1),
        np.stack([0.5 * G_v, F, G], axis=-1),
    ], axis=-2)
    zero = np.zeros_like(E)
    M2 = np.stack([
        np.stack([zero, 0.5 * E_v, 0.5 * G_u], axis=-1),
        np.stack([0.5 * E_v, E, F], axis=-1),
        np.stack([0.5 * G_u, F, G], axis=-1),
    ], axis=-2)
    with np.errstate(invalid='ignore'):
        det1 = np.linalg.det(np.nan_to_num(M1))
        det2 = np.linalg.det(np.nan_to_num(M2))
    K = (det1 - det2) / (E * G - F * F) ** 2
    return np.where(np.isfinite(E) & np.isfinite(G), K, np.nan)


def laplace_beltrami(field, geom):
    """Divergence-form Δf = (1/√det g) ∂_i(√det g g^{ij} ∂_j f) with node-centred coefficients."""
    grid = geom.grid
    fx, fy = _grad(field, grid)
    gi11, gi12, gi22 = geom.induced_g_inv
    root = np.sqrt(geom.det_g)
    flux_x = root * (gi11 * fx + gi12 * fy)
    flux_y = root * (gi12 * fx + gi22 * fy)
    dx, _ = _grad(flux_x, grid)
    _, dy = _grad(flux_y, grid)
    return (dx + dy) / root


def compute_geometry(g, spec):
    """
    Assemble every per-node field of SurfaceGeometry.

    Args:
        g: GraphFunction
        spec: MetricSpec of M

    Returns:
        SurfaceGeometry
    """
    X, Y, lam, ux, uy, w2 = _chart_fields(g, spec)
    em2l = np.exp(-2.0 * lam)
    metric = induced_metric(g, spec)
    metric_inv = _inverse(metric)
    det_g = metric[0] * metric[2] - metric[1] ** 2
    theta = -1.0 / np.sqrt(w2)
    A, h = shape_operator(g, spec)
    kappa = -em2l * (spec.lam_xx(X, Y) + spec.lam_yy(X, Y))

    # ∂_t^⊤ = ∂_t + ΘN projects to chart components −e^{−2λ}Du/W²
    t_top = np.stack([-em2l * ux / w2, -em2l * uy / w2])
    t_top_norm_sq = (metric[0] * t_top[0] ** 2 + 2.0 * metric[1] * t_top[0] * t_top[1]
                     + metric[2] * t_top[1] ** 2)

    a_sq = A[0, 0] ** 2 + 2.0 * A[0, 1] * A[1, 0] + A[1, 1] ** 2
    geom = SurfaceGeometry(
        grid=g.grid, u=g.u, induced_g=metric, induced_g_inv=metric_inv, det_g=det_g,
        theta=theta, second_form=h, shape_op=A, a_norm_sq=a_sq,
        gauss_K=kappa * theta ** 2 + 0.5 * a_sq,
        mean_H=-0.5 * (A[0, 0] + A[1, 1]),
        psi=np.arctan(theta), t_top=t_top, t_top_norm_sq=t_top_norm_sq, kappa_M=kappa,
    )
    mask = geom.report_mask
    if mask.any():
        logger.info(f"Geometry: sup|A|² = {np.max(a_sq[mask]):.4e}, sup|H| = {np.max(np.abs(geom.mean_H[mask])):.3e}, "
                    f"min Θ = {np.min(theta[mask]):.4f}")
    return geom


def sup_over(values, mask):
    values = np.abs(values[mask])
    values = values[np.isfinite(values)]
    return float(np.max(values)) if values.size else 0.0


def sup_mean_curvature(geom):
    return sup_over(geom.mean_H, geom.report_mask)


def gauss_curvature_sigma(geom, spec, maximal_tol=0.1, nodes=None):
    """
    Gaussian curvature of Σ two ways.

    (a) κ_M Θ² + ‖A‖²/2, valid only for maximal surfaces, and
    (b) the intrinsic Brioschi curvature of the induced metric.
    sup_difference is taken over geom.residual_mask(nodes).

    Returns:
        dict: 'from_gauss_equation', 'intrinsic', 'difference' fields and
        'sup_difference'
    """
    sup_H = sup_mean_curvature(geom)
    if sup_H > maximal_tol:
        raise NotMaximalError(f"sup |H| = {sup_H:.3e} exceeds {maximal_tol:.1e}; Gauss equation for maximal "
                              f"surfaces does not apply", sup_H)
    from_equation = geom.kappa_M * geom.theta ** 2 + 0.5 * geom.a_norm_sq
    intrinsic = brioschi_curvature(geom.induced_g, geom.grid)
    difference = intrinsic - from_equation
    return {
        'from_gauss_equation': from_equation,
        'intrinsic': intrinsic,
        'difference': difference,
        'sup_difference': sup_over(difference, geom.residual_mask(nodes)),
    }


def identity_fields(geom):
    """Per-node residual fields of the maximal-surface identities (i)-(v)."""
    grid = geom.grid
    theta, A, a_sq = geom.theta, geom.shape_op, geom.a_norm_sq
    g11, g12, g22 = geom.induced_g
    gi11, gi12, gi22 = geom.induced_g_inv

    # (i) ∇Θ + A∂_t^⊤ = 0
    tx, ty = _grad(theta, grid)
    grad_x = gi11 * tx + gi12 * ty
    grad_y = gi12 * tx + gi22 * ty
    vx, vy = geom.t_top
    rx = grad_x + A[0, 0] * vx + A[0, 1] * vy
    ry = grad_y + A[1, 0] * vx + A[1, 1] * vy
    gradient = np.sqrt(np.maximum(g11 * rx * rx + 2.0 * g12 * rx * ry + g22 * ry * ry, 0.0))

    # (ii) ‖∇Θ‖² = ½‖A‖²(Θ² − 1)
    grad_norm_sq = tx * grad_x + ty * grad_y
    norm = grad_norm_sq - 0.5 * a_sq * (theta ** 2 - 1.0)

    # (iii) ΔΘ = Θ(κ_M(Θ² − 1) + ‖A‖²)
    laplacian = laplace_beltrami(theta, geom) - theta * (geom.kappa_M * (theta ** 2 - 1.0) + a_sq)

    # (iv) ‖∂_t^⊤‖² = Θ² − 1
    tangent = geom.t_top_norm_sq - (theta ** 2 - 1.0)

    # (v) A² = ½‖A‖² I
    trace = A[0, 0] + A[1, 1]
    half = 0.5 * a_sq
    square = np.sqrt((A[0, 0] ** 2 + A[0, 1] * A[1, 0] - half) ** 2 + (A[0, 1] * trace) ** 2
                     + (A[1, 0] * trace) ** 2 + (A[1, 0] * A[0, 1] + A[1, 1] ** 2 - half) ** 2)

    return {'gradient': gradient, 'gradient_norm': norm, 'laplacian': laplacian,
            'tangent_norm': tangent, 'square': square}


def identity_checks(geom, spec, nodes=None):
    """
    Sup-norm residuals of the identities over geom.residual_mask(nodes).

    `nodes` (e.g. the nodes shared with a coarser grid) pins the set across
    resolutions.

    Returns:
        dict: residual name -> sup-norm, plus 'theta_arctan_ok' (Θ arctan Θ >= π/4)
        and 'lowered_asymmetry' (|g·A − (g·A)ᵀ|)
    """
    mask = geom.residual_mask(nodes)
    report = {name: sup_over(field, mask) for name, field in identity_fields(geom).items()}
    product = geom.theta * geom.psi
    report['theta_arctan_ok'] = bool(np.all(product[mask] >= np.pi / 4.0 - 1e-12))
    g11, g12, g22 = geom.induced_g
    A = geom.shape_op
    lowered_12 = g11 * A[0, 1] + g12 * A[1, 1]
    lowered_21 = g12 * A[0, 0] + g22 * A[1, 0]
    report['lowered_asymmetry'] = sup_over(lowered_12 - lowered_21, mask)
    logger.debug(f"Identity residuals: {report}")
    return report
