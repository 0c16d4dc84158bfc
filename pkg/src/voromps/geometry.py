"""Planar geometry for cell-weighted particle operators.

A point cloud inside a padded rectangle is decomposed into bounded Voronoi
cells; the operators defined elsewhere weight each neighbor by the area of its
cell clipped to an annulus around the evaluation point. Everything here is
exact up to floating point: cells come from half-plane intersections and the
cell/disk overlap areas from a circular-segment edge walk, not quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateSiteError,
    GeometryError,
    SiteOutsideDomainError,
)

FloatArray = np.ndarray

# Tolerances, relative to the local length scale where it matters.
CLIP_TOL = 1e-12
DUPLICATE_TOL = 1e-9

# Clause names whose failure makes operators or bound constants meaningless.
# The remaining clauses ("padding", "covering") are hypotheses of the error
# estimates: rows can still be evaluated when they fail, they just fall
# outside the proven regime.
STRUCTURAL_CLAUSES = frozenset(
    {"radii_ordered", "site_in_cell_and_domain", "delta_ball_in_cell", "lambda_neighbors"}
)


def _as_point(p) -> FloatArray:
    a = np.asarray(p, dtype=float).reshape(2)
    if not np.all(np.isfinite(a)):
        raise GeometryError(f"non-finite point {p!r}")
    return a


@dataclass(frozen=True)
class Point2:
    """Convenience wrapper; most interfaces accept any length-2 array-like."""

    x1: float
    x2: float

    def as_array(self) -> FloatArray:
        return np.array([self.x1, self.x2], dtype=float)


@dataclass(frozen=True)
class Annulus:
    """Closed annulus ``inner <= |y - center| <= outer``."""

    center: FloatArray
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not (0.0 <= self.inner < self.outer):
            raise GeometryError(
                f"annulus radii must satisfy 0 <= inner < outer, got {self.inner}, {self.outer}"
            )

    @property
    def area(self) -> float:
        return math.pi * (self.outer**2 - self.inner**2)


class ConvexPolygon:
    """Convex polygon, vertices counterclockwise, no repeated vertices.

    Clockwise input is reversed on construction. Collinear vertices are
    tolerated (half-plane clipping produces them); genuinely reflex corners
    are rejected.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError(f"need at least 3 vertices of dim 2, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite vertex")
        v = _dedup_ring(v)
        if v.shape[0] < 3:
            raise GeometryError("polygon degenerates after removing duplicate vertices")
        if _ring_area(v) < 0:
            v = v[::-1].copy()
        scale = float(np.max(np.abs(v))) + 1.0
        a = _ring_area(v)
        if a <= (CLIP_TOL * scale) ** 2:
            raise GeometryError(f"polygon area {a:.3e} is not positive")
        nxt = np.roll(v, -1, axis=0)
        prv = np.roll(v, 1, axis=0)
        cross = (v[:, 0] - prv[:, 0]) * (nxt[:, 1] - v[:, 1]) - (v[:, 1] - prv[:, 1]) * (
            nxt[:, 0] - v[:, 0]
        )
        if np.any(cross < -CLIP_TOL * scale * scale):
            raise GeometryError("polygon is not convex")
        self.vertices = v

    def __repr__(self):
        return f"ConvexPolygon({self.vertices.shape[0]} vertices, area={self.area:.6g})"

    @property
    def area(self) -> float:
        return _ring_area(self.vertices)

    @property
    def centroid(self) -> FloatArray:
        v = self.vertices
        n = np.roll(v, -1, axis=0)
        w = v[:, 0] * n[:, 1] - n[:, 0] * v[:, 1]
        a = w.sum() / 2.0
        return (v + n).T @ w / (6.0 * a)

    def contains(self, p, tol: float = 0.0) -> bool:
        p = _as_point(p)
        v = self.vertices
        n = np.roll(v, -1, axis=0)
        cross = (n[:, 0] - v[:, 0]) * (p[1] - v[:, 1]) - (n[:, 1] - v[:, 1]) * (p[0] - v[:, 0])
        return bool(np.all(cross >= -tol))

    def inradius_at(self, p) -> float:
        """Distance from an interior point to the boundary (min over edge lines)."""
        p = _as_point(p)
        v = self.vertices
        n = np.roll(v, -1, axis=0)
        e = n - v
        lengths = np.hypot(e[:, 0], e[:, 1])
        cross = e[:, 0] * (p[1] - v[:, 1]) - e[:, 1] * (p[0] - v[:, 0])
        return float(np.min(cross / lengths))

    def max_vertex_distance(self, p) -> float:
        p = _as_point(p)
        d = self.vertices - p
        return float(np.max(np.hypot(d[:, 0], d[:, 1])))

    def edge_normals(self) -> tuple[FloatArray, FloatArray]:
        """Outward unit normals and offsets: the polygon is n.y <= c per edge."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        e = nxt - v
        lengths = np.hypot(e[:, 0], e[:, 1])
        normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
        offsets = np.einsum("ij,ij->i", normals, v)
        return normals, offsets


def _ring_area(v: FloatArray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _dedup_ring(v: FloatArray) -> FloatArray:
    scale = float(np.max(np.abs(v))) + 1.0
    keep = []
    for i in range(v.shape[0]):
        if not keep or np.max(np.abs(v[i] - v[keep[-1]])) > CLIP_TOL * scale:
            keep.append(i)
    if len(keep) > 1 and np.max(np.abs(v[keep[0]] - v[keep[-1]])) <= CLIP_TOL * scale:
        keep.pop()
    return v[keep]


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned rectangle Omega plus padding H.

    The padded region Omega_H is the rectangle outset by H on every side;
    particles live in Omega_H, the quantities of interest are evaluated well
    inside Omega.
    """

    omega_min: FloatArray
    omega_max: FloatArray
    padding: float

    def __post_init__(self):
        lo = _as_point(self.omega_min)
        hi = _as_point(self.omega_max)
        object.__setattr__(self, "omega_min", lo)
        object.__setattr__(self, "omega_max", hi)
        if not np.all(hi > lo):
            raise GeometryError(f"empty domain rectangle {lo} .. {hi}")
        if not (self.padding > 0 and math.isfinite(self.padding)):
            raise GeometryError(f"padding must be positive, got {self.padding}")

    @property
    def omega_h_min(self) -> FloatArray:
        return self.omega_min - self.padding

    @property
    def omega_h_max(self) -> FloatArray:
        return self.omega_max + self.padding

    @property
    def center(self) -> FloatArray:
        return 0.5 * (self.omega_min + self.omega_max)

    def omega_h_polygon(self) -> ConvexPolygon:
        lo, hi = self.omega_h_min, self.omega_h_max
        return ConvexPolygon(
            [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
        )

    def contains_omega(self, p, tol: float = 0.0) -> bool:
        p = _as_point(p)
        return bool(np.all(p >= self.omega_min - tol) and np.all(p <= self.omega_max + tol))

    def contains_omega_h(self, p, tol: float = 0.0) -> bool:
        p = _as_point(p)
        return bool(np.all(p >= self.omega_h_min - tol) and np.all(p <= self.omega_h_max + tol))

    def boundary_distance_omega(self, p) -> float:
        """Signed distance to the Omega boundary; positive inside."""
        p = _as_point(p)
        return float(
            min(
                p[0] - self.omega_min[0],
                self.omega_max[0] - p[0],
                p[1] - self.omega_min[1],
                self.omega_max[1] - p[1],
            )
        )

    def boundary_distance_omega_h(self, p) -> float:
        p = _as_point(p)
        return float(
            min(
                p[0] - self.omega_h_min[0],
                self.omega_h_max[0] - p[0],
                p[1] - self.omega_h_min[1],
                self.omega_h_max[1] - p[1],
            )
        )


@dataclass(frozen=True)
class VoronoiDecomposition:
    sites: FloatArray
    cells: tuple[ConvexPolygon, ...]
    domain: DomainSpec
    r_sigma: float

    @property
    def n_sites(self) -> int:
        return int(self.sites.shape[0])

    def nearest_site(self, p) -> int:
        p = _as_point(p)
        d = self.sites - p
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))


def build_voronoi(sites, domain: DomainSpec) -> VoronoiDecomposition:
    """Bounded Voronoi cells by per-site half-plane intersection.

    Each cell starts as the padded rectangle and is clipped by the bisector
    of every other site. Other sites are visited in order of increasing
    distance so clipping can stop once the next bisector provably misses the
    current cell (its half-plane boundary is farther than every remaining
    vertex); this keeps the desk-scale O(N^2) worst case far away in practice.
    """
    pts = np.asarray(sites, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"sites must be (N, 2), got {pts.shape}")
    if pts.shape[0] < 1:
        raise GeometryError("need at least one site")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("non-finite site coordinates")

    n = pts.shape[0]
    for i in range(n):
        if not domain.contains_omega_h(pts[i]):
            raise SiteOutsideDomainError(i, pts[i])

    # O(N^2) duplicate scan in blocks; desk scale keeps this cheap.
    for i in range(n):
        d = pts[i + 1 :] - pts[i]
        if d.size:
            dist2 = np.einsum("ij,ij->i", d, d)
            j = int(np.argmin(dist2))
            if dist2[j] < DUPLICATE_TOL**2:
                raise DuplicateSiteError(i, i + 1 + j, math.sqrt(float(dist2[j])))

    lo, hi = domain.omega_h_min, domain.omega_h_max
    box_x = np.array([lo[0], hi[0], hi[0], lo[0]])
    box_y = np.array([lo[1], lo[1], hi[1], hi[1]])
    scale = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    tol = CLIP_TOL * scale

    cells = []
    r_sigma = 0.0
    for i in range(n):
        diff = pts - pts[i]
        dist2 = np.einsum("ij,ij->i", diff, diff)
        order = np.argsort(dist2, kind="stable")
        xs, ys = box_x, box_y
        rmax = _max_radius(xs, ys, pts[i])
        for j in order:
            if j == i:
                continue
            dj = math.sqrt(float(dist2[j]))
            if 0.5 * dj >= rmax:
                break
            # half-plane: points no farther from site i than from site j
            mx = 0.5 * (pts[i, 0] + pts[j, 0])
            my = 0.5 * (pts[i, 1] + pts[j, 1])
            nx_, ny_ = (pts[j, 0] - pts[i, 0]) / dj, (pts[j, 1] - pts[i, 1]) / dj
            xs, ys = _clip_halfplane(xs, ys, nx_, ny_, nx_ * mx + ny_ * my, tol)
            if xs.shape[0] < 3:
                raise GeometryError(
                    f"cell of site {i} collapsed during clipping; degenerate input"
                )
            rmax = _max_radius(xs, ys, pts[i])
        cell = ConvexPolygon(np.column_stack([xs, ys]))
        cells.append(cell)
        r_sigma = max(r_sigma, cell.max_vertex_distance(pts[i]))

    return VoronoiDecomposition(
        sites=pts.copy(), cells=tuple(cells), domain=domain, r_sigma=r_sigma
    )


def _max_radius(xs: FloatArray, ys: FloatArray, site: FloatArray) -> float:
    return float(np.max(np.hypot(xs - site[0], ys - site[1])))


def _clip_halfplane(xs, ys, nx, ny, c, tol):
    """Keep the part of a convex ring with nx*x + ny*y <= c."""
    s = nx * xs + ny * ys - c
    inside = s <= tol
    if inside.all():
        return xs, ys
    m = xs.shape[0]
    out_x, out_y = [], []
    for a in range(m):
        b = (a + 1) % m
        if inside[a]:
            out_x.append(xs[a])
            out_y.append(ys[a])
        if inside[a] != inside[b]:
            t = s[a] / (s[a] - s[b])
            out_x.append(xs[a] + t * (xs[b] - xs[a]))
            out_y.append(ys[a] + t * (ys[b] - ys[a]))
    return np.asarray(out_x), np.asarray(out_y)


# ---------------------------------------------------------------------------
# polygon / disk overlap


def polygon_disk_area(poly: ConvexPolygon, center, radius: float) -> float:
    """Area of ``poly`` intersected with the closed disk around ``center``.

    Edge walk with circular-segment terms: each directed edge contributes the
    signed area of the triangle (center, a, b) clipped to the disk, with arc
    sectors where the edge leaves the disk. Exact up to roundoff.
    """
    if radius < 0:
        raise GeometryError(f"negative radius {radius}")
    if radius == 0.0:
        return 0.0
    c = _as_point(center)
    v = poly.vertices - c
    total = 0.0
    m = v.shape[0]
    for a in range(m):
        b = (a + 1) % m
        total += _edge_disk_term(v[a, 0], v[a, 1], v[b, 0], v[b, 1], radius)
    return max(total, 0.0)


def _sector(ux, uy, vx, vy, r2):
    return 0.5 * r2 * math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)


def _edge_disk_term(ax, ay, bx, by, r):
    r2 = r * r
    ra2 = ax * ax + ay * ay
    rb2 = bx * bx + by * by
    if ra2 <= r2 and rb2 <= r2:
        return 0.5 * (ax * by - ay * bx)
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    if dd == 0.0:
        return 0.0
    # |a + t*d|^2 = r^2
    half_b = ax * dx + ay * dy
    disc = half_b * half_b - dd * (ra2 - r2)
    if disc <= 0.0:
        return _sector(ax, ay, bx, by, r2)
    sq = math.sqrt(disc)
    t1 = (-half_b - sq) / dd
    t2 = (-half_b + sq) / dd
    if ra2 <= r2:
        # leaving the disk at t2
        t = min(max(t2, 0.0), 1.0)
        px, py = ax + t * dx, ay + t * dy
        return 0.5 * (ax * py - ay * px) + _sector(px, py, bx, by, r2)
    if rb2 <= r2:
        t = min(max(t1, 0.0), 1.0)
        px, py = ax + t * dx, ay + t * dy
        return _sector(ax, ay, px, py, r2) + 0.5 * (px * by - py * bx)
    if 0.0 < t1 < t2 < 1.0:
        p1x, p1y = ax + t1 * dx, ay + t1 * dy
        p2x, p2y = ax + t2 * dx, ay + t2 * dy
        return (
            _sector(ax, ay, p1x, p1y, r2)
            + 0.5 * (p1x * p2y - p1y * p2x)
            + _sector(p2x, p2y, bx, by, r2)
        )
    return _sector(ax, ay, bx, by, r2)


def cell_annulus_area(cell: ConvexPolygon, annulus: Annulus) -> float:
    """Area of cell ∩ annulus, as outer-disk overlap minus inner-disk overlap."""
    outer = polygon_disk_area(cell, annulus.center, annulus.outer)
    inner = polygon_disk_area(cell, annulus.center, annulus.inner)
    return max(outer - inner, 0.0)


# ---------------------------------------------------------------------------
# neighbor sets and standing assumptions


def neighbor_sets(
    decomp: VoronoiDecomposition, x, h: float, focal: int | None = None
) -> tuple[list[int], list[int]]:
    """Indices within distance h of x: all of them, and all minus the focal.

    The focal index defaults to the nearest site, which is the owning cell's
    site whenever x lies in the focal cell (the only sanctioned use).
    Both lists are sorted ascending.
    """
    x = _as_point(x)
    if not (h > 0):
        raise GeometryError(f"interaction radius must be positive, got {h}")
    d = decomp.sites - x
    dist2 = np.einsum("ij,ij->i", d, d)
    rbar = np.flatnonzero(dist2 < h * h)
    if focal is None:
        focal = int(np.argmin(dist2))
    r = rbar[rbar != focal]
    return [int(i) for i in rbar], [int(i) for i in r]


@dataclass(frozen=True)
class ClauseResult:
    name: str
    passed: bool
    detail: str
    witness: tuple[float, float] | None = None


@dataclass(frozen=True)
class ValidationReport:
    clauses: tuple[ClauseResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    @property
    def structural_passed(self) -> bool:
        return all(c.passed for c in self.clauses if c.name in STRUCTURAL_CLAUSES)

    @property
    def hypothesis_passed(self) -> bool:
        return all(c.passed for c in self.clauses if c.name not in STRUCTURAL_CLAUSES)

    def clause(self, name: str) -> ClauseResult:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.clauses if not c.passed]

    def summary(self) -> str:
        return "; ".join(
            f"{c.name}={'ok' if c.passed else 'FAIL'}" for c in self.clauses
        )


def _vdc(n: int, base: int) -> FloatArray:
    """Van der Corput sequence, the usual digit-reversal radical inverse."""
    out = np.zeros(n)
    for i in range(n):
        f, denom, k = 0.0, 1.0, i + 1
        while k > 0:
            denom *= base
            k, rem = divmod(k, base)
            f += rem / denom
        out[i] = f
    return out


def disk_samples(center, radius: float, n: int) -> FloatArray:
    """Halton-style low-discrepancy points covering the open disk."""
    c = _as_point(center)
    u = _vdc(n, 2)
    v = _vdc(n, 3)
    r = radius * np.sqrt(u) * (1.0 - 1e-9)
    th = 2.0 * math.pi * v
    return np.column_stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)])


def validate_standing_assumptions(
    decomp: VoronoiDecomposition,
    k: int,
    h: float,
    delta: float,
    x=None,
    lam: float | None = None,
    samples: int = 4096,
) -> ValidationReport:
    """Check every standing clause at the evaluation point x (default: the site).

    Structural clauses (see STRUCTURAL_CLAUSES) guard well-definedness of the
    operators and constants; "padding" and "covering" are the hypotheses the
    error estimates additionally need. The covering clause is checked by
    low-discrepancy sampling of B_h(x) plus a dense ring just inside the rim,
    where violations live when they exist.
    """
    if not (0 <= k < decomp.n_sites):
        raise GeometryError(f"focal index {k} out of range")
    site = decomp.sites[k]
    x = site if x is None else _as_point(x)
    if not (delta > 0 and h > 0):
        raise GeometryError(f"need positive delta and h, got {delta}, {h}")
    if np.hypot(*(x - site)) >= delta:
        raise GeometryError("evaluation point must lie inside the focal delta-ball")
    dom = decomp.domain
    cell = decomp.cells[k]
    clauses: list[ClauseResult] = []

    r_sigma = decomp.r_sigma
    ok = r_sigma < h < dom.padding
    clauses.append(
        ClauseResult(
            "radii_ordered",
            ok,
            f"r_sigma={r_sigma:.6g}, h={h:.6g}, H={dom.padding:.6g}",
        )
    )

    in_cell = cell.contains(site, tol=0.0)
    in_omega = dom.contains_omega(site)
    clauses.append(
        ClauseResult(
            "site_in_cell_and_domain",
            in_cell and in_omega,
            f"in_cell={in_cell}, in_omega={in_omega}",
            witness=None if in_cell and in_omega else (float(site[0]), float(site[1])),
        )
    )

    inr = cell.inradius_at(site)
    omega_dist = dom.boundary_distance_omega(site)
    room = min(inr, omega_dist)
    clauses.append(
        ClauseResult(
            "delta_ball_in_cell",
            delta <= room,
            f"delta={delta:.6g}, cell inradius={inr:.6g}, omega distance={omega_dist:.6g}",
        )
    )

    if lam is not None:
        if not (0 < lam <= 1):
            raise GeometryError(f"lambda must be in (0, 1], got {lam}")
        _, r_lam = neighbor_sets(decomp, site, lam * h, focal=k)
        clauses.append(
            ClauseResult(
                "lambda_neighbors",
                len(r_lam) > 0,
                f"{len(r_lam)} neighbors within lambda*h={lam * h:.6g}",
            )
        )

    pad_room = dom.boundary_distance_omega_h(x)
    need = h + r_sigma
    clauses.append(
        ClauseResult(
            "padding",
            pad_room >= need,
            f"distance to Omega_H boundary {pad_room:.6g}, needs >= h+r_sigma={need:.6g}",
        )
    )

    clauses.append(_check_covering(decomp, x, h, samples))
    return ValidationReport(clauses=tuple(clauses))


def _check_covering(decomp, x, h, samples) -> ClauseResult:
    # B_h(x) must be covered by closures of cells whose sites are strictly
    # inside B_h(x). Equivalently: the owner of every point of the ball is a
    # strict neighbor. Violations concentrate near the rim, so add a dense
    # ring at 99.9% radius on top of the low-discrepancy fill.
    rbar, _ = neighbor_sets(decomp, x, h)
    rbar_mask = np.zeros(decomp.n_sites, dtype=bool)
    rbar_mask[rbar] = True
    pts = disk_samples(x, h, samples)
    th = 2.0 * math.pi * (np.arange(512) + 0.5) / 512
    ring = np.column_stack(
        [x[0] + 0.999 * h * np.cos(th), x[1] + 0.999 * h * np.sin(th)]
    )
    pts = np.vstack([pts, ring])

    dom = decomp.domain
    outside = ~(
        (pts[:, 0] >= dom.omega_h_min[0])
        & (pts[:, 0] <= dom.omega_h_max[0])
        & (pts[:, 1] >= dom.omega_h_min[1])
        & (pts[:, 1] <= dom.omega_h_max[1])
    )
    if np.any(outside):
        w = pts[int(np.flatnonzero(outside)[0])]
        return ClauseResult(
            "covering",
            False,
            "sample point of B_h(x) falls outside the padded domain",
            witness=(float(w[0]), float(w[1])),
        )

    sites = decomp.sites
    owner = np.empty(pts.shape[0], dtype=int)
    for start in range(0, pts.shape[0], 1024):
        block = pts[start : start + 1024]
        d2 = (
            (block[:, 0, None] - sites[None, :, 0]) ** 2
            + (block[:, 1, None] - sites[None, :, 1]) ** 2
        )
        owner[start : start + block.shape[0]] = np.argmin(d2, axis=1)
    bad = ~rbar_mask[owner]
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        w = pts[idx]
        o = int(owner[idx])
        dist = float(np.hypot(*(sites[o] - x)))
        return ClauseResult(
            "covering",
            False,
            f"point owned by site {o} at distance {dist:.6g} >= h={h:.6g}",
            witness=(float(w[0]), float(w[1])),
        )
    return ClauseResult(
        "covering", True, f"{pts.shape[0]} samples all owned by strict neighbors"
    )
