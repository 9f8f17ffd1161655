#!/usr/bin/env python3
"""
Integral curvature estimate for maximal graphs and its consequences.

For a geodesic disc D(p, r) inside D(p, R) the checked inequality is

    0 <= ∫_{D(p,r)} ‖A‖² dΣ <= c_r · L(r) / (r log(R/r)),
    c_r = π²(1 + α_r²)² / (4 α_r arctan α_r),   α_r = sup_{D(p,r)} (−Θ),

together with the auxiliary bound on ∫ψΔψ for ψ = arctan Θ, the pointwise
inequality ψΔψ >= φ(Θ)‖A‖² and the radius bound R <= r·e^{C_r}.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from chart_metric import is_positive_somewhere
from errors import ChartDomainError, UndefinedBoundError
from geodesic_engine import disc_extract, disc_integral, geodesic_distance
from surface_geometry import identity_fields, laplace_beltrami, sup_over

logger = logging.getLogger(__name__)

# JSON / CSV field order of an EstimateReport
REPORT_FIELDS = ['p', 'r', 'R', 'alpha_r', 'c_r', 'lhs', 'L_r', 'rhs', 'slack', 'C_r', 'R_max',
                 'lemma_lhs', 'lemma_rhs', 'eq17_min_margin']

DEFAULT_TOLERANCES = {
    'ineq_relative': 0.05,
    'pointwise_factor': 10.0,
    'totally_geodesic': 1e-10,
    'rigidity': 1e-6,
}

SLICE = 'totally-geodesic-slice'
NONSLICE = 'totally-geodesic-nonslice'
CURVED = 'non-totally-geodesic'

# Θ below −1 − STRICT_TILT counts as tilted for the strict pointwise margin
STRICT_TILT = 1e-6


@dataclass
class EstimateReport:
    p: int
    r: float
    R: float
    alpha_r: float
    c_r: float
    lhs: float
    L_r: float
    rhs: float
    slack: float
    C_r: Optional[float] = None
    R_max: Optional[float] = None
    lemma_lhs: float = float('nan')
    lemma_rhs: float = float('nan')
    eq17_min_margin: float = float('nan')
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        data = asdict(self)
        extras = data.pop('extras')
        return {**{k: _plain(data[k]) for k in REPORT_FIELDS}, **{k: _plain(v) for k, v in extras.items()}}

    def csv_row(self, extra_keys=()):
        data = self.to_dict()
        return [data.get(k) for k in list(REPORT_FIELDS) + list(extra_keys)]


def _plain(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def alpha_r(disc, theta_field):
    """max of −Θ over the vertices of the disc's (clipped) triangles."""
    values = -np.asarray(theta_field, dtype=float).ravel()[disc.vertices]
    return float(np.max(values))


def c_r(alpha):
    """π²(1 + α²)² / (4 α arctan α); defined for α >= 1."""
    if not alpha >= 1.0:
        raise ChartDomainError(f"c_r needs alpha >= 1, got {alpha}")
    return math.pi ** 2 * (1.0 + alpha * alpha) ** 2 / (4.0 * alpha * math.atan(alpha))


def phi(s):
    """φ(s) = 2s·arctan(s)/(1 + s²)², positive and increasing for s <= −1."""
    s = np.asarray(s, dtype=float)
    value = 2.0 * s * np.arctan(s) / (1.0 + s * s) ** 2
    return float(value) if value.ndim == 0 else value


def psi_laplacian_analytic(geom):
    """
    ψΔψ from the fields, split as (φ(Θ)‖A‖², curvature term).

    The curvature term (Θ² − 1)Θ arctanΘ/(1 + Θ²)·κ_M vanishes identically
    where κ_M = 0.
    """
    theta = geom.theta
    leading = phi(theta) * geom.a_norm_sq
    curvature = (theta ** 2 - 1.0) * theta * np.arctan(theta) / (1.0 + theta ** 2) * geom.kappa_M
    return leading, curvature


def psi_laplacian_discrete(geom):
    return geom.psi * laplace_beltrami(geom.psi, geom)


def pointwise_margin_check(geom, disc=None):
    """
    Margin of ψΔψ >= φ(Θ)‖A‖² evaluated from the analytic expansion.

    Args:
        geom: SurfaceGeometry of a maximal graph
        disc: Optional GeodesicDisc restricting the minimum to its vertices

    Returns:
        dict: 'min_margin' (over the disc or every report node),
        'node_min_margin' (every report node), 'strict_min_margin' (report
        nodes with κ_M > 0 and Θ < −1 − STRICT_TILT, where the margin is
        positive; None when there are none), 'discrete_gap' (sup of the
        analytic minus discrete ψΔψ over the disc, or over
        geom.residual_mask()) and 'curvature_ok' (κ_M >= 0 there, the
        hypothesis under which the margin is non-negative)
    """
    leading, curvature = psi_laplacian_analytic(geom)
    # (a + b) − a is exactly 0 when b = 0
    margin = (leading + curvature) - leading
    discrete = psi_laplacian_discrete(geom)
    mask = geom.report_mask
    node_margin = margin[mask]
    node_margin = node_margin[np.isfinite(node_margin)]
    node_min = float(np.min(node_margin)) if node_margin.size else 0.0
    strict = mask & (geom.kappa_M > 0.0) & (geom.theta < -1.0 - STRICT_TILT) & np.isfinite(margin)
    strict_min = float(np.min(margin[strict])) if strict.any() else None

    if disc is not None:
        idx = disc.vertices
        flat_margin = margin.ravel()[idx]
        min_margin = float(np.min(flat_margin))
        gap = (leading + curvature - discrete).ravel()[idx]
        gap = float(np.max(np.abs(gap[np.isfinite(gap)]))) if np.isfinite(gap).any() else 0.0
        kappa = geom.kappa_M.ravel()[idx]
    else:
        min_margin = node_min
        gap = sup_over(leading + curvature - discrete, geom.residual_mask())
        kappa = geom.kappa_M[mask]
    result = {
        'min_margin': min_margin,
        'node_min_margin': node_min,
        'strict_min_margin': strict_min,
        'discrete_gap': gap,
        'curvature_ok': bool(np.all(kappa >= -1e-12)),
    }
    if result['curvature_ok'] and min_margin < 0.0:
        logger.warning(f"ψΔψ − φ(Θ)‖A‖² = {min_margin:.3e} < 0 with κ_M >= 0")
    return result


def _distance_field(mesh, p, R):
    # march a little past R so both discs are fully resolved
    return geodesic_distance(mesh, p, stop_at=R + 3.0 * mesh.max_edge)


def _pointwise_tolerance(geom, pointwise_factor):
    sup_lap = sup_over(identity_fields(geom)['laplacian'], geom.report_mask)
    return max(pointwise_factor * sup_lap, 1e-12)


def psi_bound_check(geom, mesh, p, r, R, tol_pt=None, distances=None,
                 pointwise_factor=DEFAULT_TOLERANCES['pointwise_factor']):
    """
    ∫_{D(p,r)} ψΔψ <= 2L(r)/(r log(R/r)) · sup_{D(p,R)} ψ², with ψ = arctan Θ.

    ψΔψ uses the discrete Laplace-Beltrami operator. The hypothesis ψΔψ >= 0
    is checked on D(p, R) against tol_pt (default: pointwise_factor times the
    measured sup residual of the Θ Laplacian identity).

    Returns:
        dict: lemma_lhs, lemma_rhs, psi_rhs_global (sup ψ² replaced by
        π²/4), pointwise_min, tol_pt, hypothesis_ok, bound_ok
    """
    if not 0.0 < r < R:
        raise ChartDomainError(f"Need 0 < r < R, got r={r}, R={R}")
    distances = distances or _distance_field(mesh, p, R)
    disc_R = disc_extract(distances, R)
    disc_r = disc_extract(distances, r)
    if tol_pt is None:
        tol_pt = _pointwise_tolerance(geom, pointwise_factor)

    product = psi_laplacian_discrete(geom)
    pointwise_min = float(np.min(product.ravel()[disc_R.vertices]))
    sup_psi_sq = float(np.max(geom.psi.ravel()[disc_R.vertices] ** 2))
    factor = 2.0 * disc_r.L / (r * math.log(R / r))
    lemma_lhs = disc_integral(disc_r, product)
    lemma_rhs = factor * sup_psi_sq
    result = {
        'lemma_lhs': lemma_lhs,
        'lemma_rhs': lemma_rhs,
        'psi_rhs_global': factor * math.pi ** 2 / 4.0,
        'pointwise_min': pointwise_min,
        'tol_pt': tol_pt,
        'hypothesis_ok': pointwise_min >= -tol_pt,
        'bound_ok': lemma_lhs <= lemma_rhs,
    }
    if not result['hypothesis_ok']:
        logger.warning(f"ψΔψ = {pointwise_min:.3e} below −{tol_pt:.3e} on D(p, {R}); grid too coarse")
    return result


def estimate_check(geom, mesh, p, r, R, tolerances=None, distances=None):
    """
    Assemble the full EstimateReport for the disc pair D(p, r) ⊂ D(p, R).

    Args:
        geom: SurfaceGeometry
        mesh: TriMesh of the same graph
        p: Center vertex index or grid node (i, j)
        r, R: Radii with 0 < r < R; D(p, R) must stay inside the mesh
        tolerances: Overrides of DEFAULT_TOLERANCES
        distances: Precomputed DistanceField from p reaching past R

    Returns:
        EstimateReport (extras carry the individual pass flags)

    Raises:
        NotContainedError: D(p, R) reaches the mesh boundary
    """
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    if not 0.0 < r < R:
        raise ChartDomainError(f"Need 0 < r < R, got r={r}, R={R}")
    if isinstance(p, (tuple, list)):
        p = mesh.vertex_index(p)
    distances = distances or _distance_field(mesh, p, R)
    disc_R = disc_extract(distances, R)
    disc_r = disc_extract(distances, r)

    alpha = alpha_r(disc_r, geom.theta)
    cr = c_r(alpha)
    lhs = disc_integral(disc_r, geom.a_norm_sq)
    log_ratio = math.log(R / r)
    rhs = cr * disc_r.L / (r * log_ratio)
    slack = rhs - lhs
    tol_ineq = tol['ineq_relative'] * rhs

    psi = psi_bound_check(geom, mesh, p, r, R, distances=distances, pointwise_factor=tol['pointwise_factor'])
    margin = pointwise_margin_check(geom, disc_r)

    leading, curvature = psi_laplacian_analytic(geom)
    chain_lower = phi(-alpha) * lhs
    chain_middle = disc_integral(disc_r, leading + curvature)
    chain_upper = (math.pi ** 2 / 2.0) * disc_r.L / (r * log_ratio)

    X, Y = disc_r.mesh.coords[p]
    report = EstimateReport(
        p=int(p), r=float(r), R=float(R), alpha_r=alpha, c_r=cr, lhs=lhs, L_r=disc_r.L, rhs=rhs, slack=slack,
        lemma_lhs=psi['lemma_lhs'], lemma_rhs=psi['lemma_rhs'], eq17_min_margin=margin['min_margin'],
    )
    report.extras = {
        'p_chart': [float(X), float(Y)],
        'area_r': disc_r.area,
        'area_R': disc_R.area,
        'L_R': disc_R.L,
        'n_components': disc_r.n_components,
        'multi_component': disc_r.multi_component,
        'tol_ineq': tol_ineq,
        'inequality_ok': slack >= -tol_ineq and lhs >= -tol_ineq,
        'psi_rhs_global': psi['psi_rhs_global'],
        'psi_pointwise_min': psi['pointwise_min'],
        'psi_tol_pt': psi['tol_pt'],
        'psi_bound_ok': psi['hypothesis_ok'] and psi['bound_ok'],
        'margin_discrete_gap': margin['discrete_gap'],
        'pointwise_ok': margin['min_margin'] >= 0.0 or not margin['curvature_ok'],
        'chain_lower': chain_lower,
        'chain_middle': chain_middle,
        'chain_upper': chain_upper,
        'chain_ok': chain_lower <= chain_middle * (1.0 + 1e-12) + 1e-15 and chain_middle <= chain_upper,
        'radius_bound_ok': True,
    }

    if lhs > tol['totally_geodesic']:
        report.C_r, report.R_max = radius_bound(report)
        if slack >= 0.0:
            report.extras['radius_bound_ok'] = R <= report.R_max * (1.0 + 1e-12)

    level = logging.INFO if report.extras['inequality_ok'] else logging.WARNING
    logger.log(level, f"D(p={p}, r={r}) in D(R={R}): lhs={lhs:.6e} rhs={rhs:.6e} slack={slack:.6e} "
                      f"α_r={alpha:.6f} L(r)={disc_r.L:.6f}")
    return report


def radius_bound(report):
    """
    C_r = c_r L(r) / (r ∫‖A‖²) and R_max = r·e^{C_r}.

    Raises:
        UndefinedBoundError: when ∫‖A‖² over D(p, r) is not positive
    """
    if not report.lhs > 0.0:
        raise UndefinedBoundError(f"∫‖A‖² = {report.lhs} over D(p, {report.r}); the radius bound needs a "
                                  f"surface that is not totally geodesic on the disc")
    C = report.c_r * report.L_r / (report.r * report.lhs)
    try:
        R_max = report.r * math.exp(C)
    except OverflowError:
        R_max = math.inf
    return C, R_max


def rigidity_probe(geom, spec=None, tol=DEFAULT_TOLERANCES['rigidity']):
    """
    Classify the graph as a slice, a non-slice totally geodesic graph, or neither.

    Over a metric with K_M > 0 somewhere a totally geodesic maximal graph
    must be a slice; a non-slice there is reported as inconsistent.
    """
    mask = geom.report_mask
    sup_A = math.sqrt(sup_over(geom.a_norm_sq, mask))
    sup_tilt = sup_over(geom.theta + 1.0, mask)
    if sup_A < tol:
        classification = SLICE if sup_tilt < tol else NONSLICE
    else:
        classification = CURVED
    positive = bool(spec is not None and is_positive_somewhere(spec, geom.grid))
    result = {
        'classification': classification,
        'sup_A': sup_A,
        'sup_theta_tilt': sup_tilt,
        'positive_curvature_somewhere': positive,
        'consistent': not (classification == NONSLICE and positive),
    }
    if not result['consistent']:
        logger.warning("Totally geodesic non-slice graph over a metric with K_M > 0 somewhere")
    logger.info(f"Rigidity probe: {classification} (sup‖A‖ = {sup_A:.3e}, sup|Θ+1| = {sup_tilt:.3e})")
    return result


def rigidity_asymptotics(reports, spread_tol=0.10, lhs_floor=DEFAULT_TOLERANCES['totally_geodesic']):
    """
    Decay of the bound at fixed r as R grows.

    rhs·log(R/r) = c_r L(r)/r must not depend on R, so rhs falls like
    1/log(R/r); lhs stays below rhs for every R.

    Returns:
        dict keyed by r: products, spread, constant_ok, lhs_ok, lhs_zero
    """
    by_r = {}
    for report in reports:
        by_r.setdefault(report.r, []).append(report)
    result = {}
    for r, group in sorted(by_r.items()):
        group = sorted(group, key=lambda rep: rep.R)
        products = [rep.rhs * math.log(rep.R / rep.r) for rep in group]
        mean = float(np.mean(products))
        spread = float((max(products) - min(products)) / mean) if mean > 0 else 0.0
        result[r] = {
            'R': [rep.R for rep in group],
            'products': products,
            'spread': spread,
            'constant_ok': spread <= spread_tol,
            'lhs_ok': all(rep.lhs <= rep.rhs for rep in group),
            'lhs_zero': all(rep.lhs <= lhs_floor for rep in group),
        }
    return result


def _chart_pieces(disc):
    """Chart triangles covering the pre-image of the clipped disc."""
    mesh, d, r = disc.mesh, disc.d, disc.radius
    for t in disc.triangles.tolist():
        tri = mesh.triangles[t]
        V = mesh.coords[tri]
        dd = d[tri]
        inside = dd <= r
        if inside.all():
            yield V[0], V[1], V[2]
            continue

        def cross(k, j):
            s = (r - dd[k]) / (dd[j] - dd[k])
            return V[k] + s * (V[j] - V[k])

        if inside.sum() == 1:
            k = int(np.flatnonzero(inside)[0])
            k1, k2 = (k + 1) % 3, (k + 2) % 3
            yield V[k], cross(k, k1), cross(k, k2)
        else:
            k = int(np.flatnonzero(~inside)[0])
            k1, k2 = (k + 1) % 3, (k + 2) % 3
            yield V[k1], V[k2], cross(k, k2)
            yield V[k1], cross(k, k2), cross(k, k1)


def disc_quadrature_oracle(disc, density, epsabs=1e-12, epsrel=1e-9):
    """
    Adaptive quadrature of a chart density over the pre-image of the disc.

    Args:
        disc: GeodesicDisc (with mesh and distance values attached)
        density: Callable (x, y) -> integrand per unit chart area, e.g.
            ‖A‖²·√det g for the curvature integral

    Returns:
        float
    """
    total = 0.0
    for a, b, c in _chart_pieces(disc):
        e1, e2 = b - a, c - a
        jac = abs(e1[0] * e2[1] - e1[1] * e2[0])
        if jac == 0.0:
            continue

        def integrand(t, s, a=a, e1=e1, e2=e2):
            x, y = a + s * e1 + t * e2
            return density(x, y)

        value, _ = integrate.dblquad(integrand, 0.0, 1.0, 0.0, lambda s: 1.0 - s, epsabs=epsabs, epsrel=epsrel)
        total += value * jac
    return float(total)
