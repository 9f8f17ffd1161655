#!/usr/bin/env python3
"""
Geodesic machinery on the graph surface.

The grid is triangulated (each cell split along its lower-left to upper-right
diagonal) and every edge gets its length in the induced metric. Distances
are first-arrival times of a triangle fast-marching front; triangles where
the unfolded update is not upwind fall back to edge (Dijkstra) updates.
"""

import heapq
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from errors import ChartDomainError, MeshError, NotContainedError

logger = logging.getLogger(__name__)

MIN_EDGE = 1e-14


@dataclass
class TriMesh:
    grid: object
    coords: np.ndarray          # (n, 2) chart coordinates
    triangles: np.ndarray       # (m, 3) vertex indices
    lengths: np.ndarray         # (m, 3) length of the edge opposite each corner
    areas: np.ndarray           # (m,)
    boundary_vertices: np.ndarray
    vertex_triangles: List[List[int]] = field(repr=False, default_factory=list)

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def max_edge(self):
        return float(np.max(self.lengths))

    def vertex_index(self, node):
        i, j = node
        return int(i) * self.grid.ny + int(j)


def _edge_lengths(spec, coords, u, a, b):
    mid = 0.5 * (coords[a] + coords[b])
    d = coords[b] - coords[a]
    du = u[b] - u[a]
    return np.exp(2.0 * spec.lam(mid[:, 0], mid[:, 1])) * np.sum(d * d, axis=1) - du * du


def triangle_areas(lengths):
    """Heron's formula on per-triangle edge lengths."""
    a, b, c = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    ph = 0.5 * (a + b + c)
    return np.sqrt(np.maximum(ph * (ph - a) * (ph - b) * (ph - c), 0.0))


def triangulate(g, geom, spec):
    """
    Triangulate the graph's domain with induced-metric edge lengths.

    An edge from a to b has length² = e^{2λ(mid)}|b − a|² − (u(b) − u(a))²,
    the one-point midpoint rule for ∫√(g(ė, ė)).

    Args:
        g: GraphFunction
        geom: SurfaceGeometry (nodes with non-finite Θ are left out)
        spec: MetricSpec

    Returns:
        TriMesh
    """
    grid = g.grid
    nx, ny = grid.nx, grid.ny
    X, Y = grid.node_coords()
    coords = np.column_stack([X.ravel(), Y.ravel()])
    u = g.u.ravel()
    usable = (grid.domain_mask & np.isfinite(geom.theta)).ravel()

    I, J = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing='ij')
    I, J = I.ravel(), J.ravel()
    v00, v10 = I * ny + J, (I + 1) * ny + J
    v01, v11 = I * ny + J + 1, (I + 1) * ny + J + 1
    tris = np.concatenate([np.stack([v00, v10, v11], axis=1), np.stack([v00, v11, v01], axis=1)])
    tris = tris[usable[tris].all(axis=1)]
    if len(tris) == 0:
        raise MeshError("No triangles inside the graph's domain")

    sq = np.stack([_edge_lengths(spec, coords, u, tris[:, (k + 1) % 3], tris[:, (k + 2) % 3]) for k in range(3)],
                  axis=1)
    if np.any(sq < MIN_EDGE ** 2):
        raise MeshError(f"Degenerate or non-spacelike edge (min length² {np.min(sq):.3e})")
    lengths = np.sqrt(sq)
    a, b, c = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    slack = 1e-12 * (a + b + c)
    bad = (a >= b + c - slack) | (b >= a + c - slack) | (c >= a + b - slack)
    if np.any(bad):
        raise MeshError(f"{int(bad.sum())} triangles violate the triangle inequality")

    edges = np.concatenate([np.sort(tris[:, [k, (k + 1) % 3]], axis=1) for k in range(3)])
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    boundary = np.unique(unique[counts == 1].ravel())

    vertex_triangles = [[] for _ in range(len(coords))]
    for t, tri in enumerate(tris.tolist()):
        for v in tri:
            vertex_triangles[v].append(t)

    mesh = TriMesh(grid, coords, tris, lengths, triangle_areas(lengths), boundary, vertex_triangles)
    logger.info(f"Mesh: {len(tris)} triangles, {len(boundary)} boundary vertices, total area {mesh.areas.sum():.6f}")
    return mesh


@dataclass
class DistanceField:
    mesh: TriMesh
    source: int
    d: np.ndarray
    method: str = 'fast-marching'
    stop_at: Optional[float] = None
    triangle_updates: int = 0
    fallbacks: int = 0

    @property
    def unreachable(self):
        return int(np.sum(~np.isfinite(self.d)))


def _triangle_update(dA, dB, a, b, c):
    """
    Distance at C from known A, B by unfolding ABC into the plane.

    a = |BC|, b = |AC|, c = |AB|. Returns inf when the virtual source does
    not see C through the segment AB (obtuse or non-upwind configuration).
    """
    cx = (b * b + c * c - a * a) / (2.0 * c)
    cy2 = b * b - cx * cx
    if cy2 <= 0.0:
        return math.inf
    cy = math.sqrt(cy2)
    sx = (dA * dA - dB * dB + c * c) / (2.0 * c)
    sy2 = dA * dA - sx * sx
    if sy2 < 0.0:
        return math.inf
    sy = -math.sqrt(sy2)
    cross = sx + (-sy / (cy - sy)) * (cx - sx)
    if cross < 0.0 or cross > c:
        return math.inf
    dC = math.hypot(cx - sx, cy - sy)
    if dC < max(dA, dB):
        return math.inf
    return dC


def geodesic_distance(mesh, p, stop_at=None):
    """
    Fast-marching geodesic distance from vertex p.

    Args:
        mesh: TriMesh
        p: Vertex index or grid node (i, j)
        stop_at: Optional distance after which marching stops; vertices not
            accepted by then are left at +inf

    Returns:
        DistanceField
    """
    if isinstance(p, (tuple, list)):
        p = mesh.vertex_index(p)
    if not mesh.vertex_triangles[p]:
        raise ChartDomainError(f"Source vertex {p} is not part of the mesh")

    tris = mesh.triangles.tolist()
    lens = mesh.lengths.tolist()
    d = [math.inf] * mesh.n_vertices
    accepted = [False] * mesh.n_vertices
    d[p] = 0.0
    heap = [(0.0, p)]
    updates = fallbacks = 0

    while heap:
        dv, v = heapq.heappop(heap)
        if accepted[v] or dv > d[v]:
            continue
        if stop_at is not None and dv > stop_at:
            break
        accepted[v] = True
        for t in mesh.vertex_triangles[v]:
            tri, ln = tris[t], lens[t]
            kv = tri.index(v)
            for step in (1, 2):
                kw = (kv + step) % 3
                w = tri[kw]
                if accepted[w]:
                    continue
                ko = 3 - kv - kw
                o = tri[ko]
                candidate = dv + ln[ko]
                if accepted[o]:
                    updates += 1
                    # A = v, B = o, C = w
                    through = _triangle_update(dv, d[o], ln[kv], ln[ko], ln[kw])
                    if through == math.inf:
                        fallbacks += 1
                    else:
                        candidate = min(candidate, through)
                if candidate < d[w]:
                    d[w] = candidate
                    heapq.heappush(heap, (candidate, w))

    dist = np.array(d)
    dist[~np.array(accepted)] = np.inf
    field_ = DistanceField(mesh, p, dist, stop_at=stop_at, triangle_updates=updates, fallbacks=fallbacks)
    logger.debug(f"Fast marching from {p}: {int(np.sum(accepted))} accepted, {updates} triangle updates, "
                 f"{fallbacks} Dijkstra fallbacks")
    return field_


def triangle_consistency(field_):
    """Largest d(v) − d(w) − len(v, w) over mesh edges between reached vertices (<= 0 when consistent)."""
    mesh = field_.mesh
    worst = -np.inf
    for k in range(3):
        a = mesh.triangles[:, (k + 1) % 3]
        b = mesh.triangles[:, (k + 2) % 3]
        da, db = field_.d[a], field_.d[b]
        ok = np.isfinite(da) & np.isfinite(db)
        if ok.any():
            excess = np.abs(da - db)[ok] - mesh.lengths[ok, k]
            worst = max(worst, float(np.max(excess)))
    return worst


@dataclass
class GeodesicDisc:
    center: int
    radius: float
    triangles: np.ndarray       # indices into mesh.triangles
    fractions: np.ndarray       # area fraction of each kept triangle inside the disc
    vertices: np.ndarray        # vertices of kept triangles
    polylines: List[np.ndarray]  # boundary components, chart coordinates
    L: float
    area: float
    n_components: int
    closed: bool
    mesh: TriMesh = field(repr=False, default=None)
    d: np.ndarray = field(repr=False, default=None)

    @property
    def multi_component(self):
        return self.n_components > 1

    @property
    def chart_length(self):
        """Euclidean length of the boundary polylines in the chart."""
        return float(sum(np.sum(np.hypot(*np.diff(line, axis=0).T)) for line in self.polylines))


def _crossing(tri, dd, inside, r):
    """Crossing points (edge key, barycentric, local pair) and area fraction of a cut triangle."""
    lonely = [k for k in range(3) if inside[k] == (sum(inside) == 1)][0]
    points = []
    ts = []
    for other in ((lonely + 1) % 3, (lonely + 2) % 3):
        t = (r - dd[lonely]) / (dd[other] - dd[lonely])
        bary = [0.0, 0.0, 0.0]
        bary[lonely] = 1.0 - t
        bary[other] = t
        key = (min(tri[lonely], tri[other]), max(tri[lonely], tri[other]))
        points.append((key, bary))
        ts.append(t)
    fraction = ts[0] * ts[1]
    if sum(inside) == 2:
        fraction = 1.0 - fraction
    return points, fraction


def _segment_length(b0, b1, ln):
    # |P − Q|² = −Σ_{i<j} δ_i δ_j ℓ_ij² for barycentric displacement δ (Σδ = 0)
    delta = [b0[k] - b1[k] for k in range(3)]
    sq = -(delta[0] * delta[1] * ln[2] ** 2 + delta[0] * delta[2] * ln[1] ** 2 + delta[1] * delta[2] * ln[0] ** 2)
    return math.sqrt(max(sq, 0.0))


def disc_extract(field_, r):
    """
    Geodesic disc D(p, r) with its clipped triangles and boundary circle.

    Raises:
        NotContainedError: the disc reaches the mesh boundary
    """
    mesh = field_.mesh
    if not r > 0:
        raise ChartDomainError(f"Disc radius must be positive, got {r}")
    if field_.stop_at is not None and r + 2.0 * mesh.max_edge > field_.stop_at:
        raise ChartDomainError(f"Radius {r} too close to the marching stop {field_.stop_at}")
    d = field_.d
    boundary_d = d[mesh.boundary_vertices]
    if boundary_d.size and np.min(boundary_d) <= r:
        raise NotContainedError(f"D(p, {r:.4f}) reaches the mesh boundary (nearest boundary vertex at "
                                f"{np.min(boundary_d):.4f})", r)

    D = d[mesh.triangles]
    inside = D <= r
    count = inside.sum(axis=1)
    full = np.flatnonzero(count == 3)
    cut = np.flatnonzero((count == 1) | (count == 2))

    fractions = [1.0] * len(full)
    links = defaultdict(list)
    positions = {}
    L = 0.0
    for t in cut.tolist():
        tri = mesh.triangles[t].tolist()
        ln = mesh.lengths[t].tolist()
        ((k0, b0), (k1, b1)), fraction = _crossing(tri, D[t].tolist(), inside[t].tolist(), r)
        fractions.append(fraction)
        L += _segment_length(b0, b1, ln)
        links[k0].append(k1)
        links[k1].append(k0)
        for key, bary in ((k0, b0), (k1, b1)):
            positions[key] = sum(bary[k] * mesh.coords[tri[k]] for k in range(3))

    kept = np.concatenate([full, cut])
    fractions = np.array(fractions)
    polylines, closed = _assemble_polylines(links, positions)
    area = float(np.sum(mesh.areas[kept] * fractions))
    disc = GeodesicDisc(center=field_.source, radius=float(r), triangles=kept, fractions=fractions,
                        vertices=np.unique(mesh.triangles[kept].ravel()), polylines=polylines, L=L, area=area,
                        n_components=len(polylines), closed=closed, mesh=mesh, d=d)
    if disc.multi_component or not closed:
        logger.warning(f"Disc of radius {r:.4f}: {disc.n_components} boundary components, closed={closed}; "
                       f"L(r) is outside the smooth-circle regime")
    logger.debug(f"Disc r={r:.4f}: L={L:.6f}, area={area:.6f}, {len(kept)} triangles")
    return disc


def _assemble_polylines(links, positions):
    """Chain crossing points into boundary components; closed when every point has two links."""
    closed = all(len(nbrs) == 2 for nbrs in links.values())
    seen = set()
    polylines = []
    for start in sorted(links):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        current = start
        while True:
            nxt = [k for k in links[current] if k not in seen]
            if not nxt:
                break
            current = nxt[0]
            seen.add(current)
            chain.append(current)
        if closed:
            chain.append(start)
        polylines.append(np.array([positions[k] for k in chain]))
    return polylines, closed


def disc_integral(disc, values):
    """Σ over kept triangles of mean vertex value × induced area × clip fraction."""
    mesh = disc.mesh
    flat = np.asarray(values, dtype=float).ravel()
    tri = mesh.triangles[disc.triangles]
    means = flat[tri].mean(axis=1)
    return float(np.sum(means * mesh.areas[disc.triangles] * disc.fractions))
