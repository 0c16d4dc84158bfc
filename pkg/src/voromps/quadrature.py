"""Polar quadrature over convex regions.

One engine covers every area integral the operators and bound constants
need: integrate over (polygon ∩ annulus) around an arbitrary center. The
angular range is sliced at polygon vertex directions and at angles where an
edge line crosses a clip radius; on each slice the radial entry/exit bounds
are smooth, so tensor Gauss-Legendre nodes converge spectrally. Geometry is
exact, the only error is the GL remainder of a smooth integrand.

Pure-annulus integrals use midpoint nodes in the angle (spectral for
periodic integrands) and Gauss-Legendre in the radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError, QuadratureError
from .geometry import ConvexPolygon, _as_point

FloatArray = np.ndarray

_TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=64)
def _gl(n: int) -> tuple[FloatArray, FloatArray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class RegionNodes:
    """Quadrature nodes for one region: sum(weights * f(points)) ≈ ∫ f.

    ``radii`` are distances from the region's center, kept around because
    most integrands here are radial profiles times something cheap.
    """

    points: FloatArray
    radii: FloatArray
    weights: FloatArray

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def integrate(self, values: FloatArray):
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n:
            raise ValueError(f"expected {self.n} values, got {values.shape}")
        return self.weights @ values

    @staticmethod
    def concat(parts: Iterable["RegionNodes"]) -> "RegionNodes":
        parts = list(parts)
        if not parts:
            return _EMPTY_NODES
        return RegionNodes(
            points=np.concatenate([p.points for p in parts], axis=0),
            radii=np.concatenate([p.radii for p in parts]),
            weights=np.concatenate([p.weights for p in parts]),
        )


_EMPTY_NODES = RegionNodes(
    points=np.zeros((0, 2)), radii=np.zeros(0), weights=np.zeros(0)
)


def _slice_angles(poly: ConvexPolygon, center: FloatArray, levels: Sequence[float]) -> FloatArray:
    """Sorted angular breakpoints: vertex directions plus level crossings."""
    rel = poly.vertices - center
    angles = [np.mod(np.arctan2(rel[:, 1], rel[:, 0]), _TWO_PI)]
    normals, offsets = poly.edge_normals()
    off = offsets - normals @ center  # signed edge-line distances from center
    psi = np.arctan2(normals[:, 1], normals[:, 0])
    for lev in levels:
        if not (lev > 0) or not math.isfinite(lev):
            continue
        ratio = off / lev
        ok = np.abs(ratio) <= 1.0
        if np.any(ok):
            spread = np.arccos(ratio[ok])
            base = psi[ok]
            angles.append(np.mod(base + spread, _TWO_PI))
            angles.append(np.mod(base - spread, _TWO_PI))
    th = np.sort(np.concatenate(angles))
    # collapse near-duplicates; the lost slices would have ~zero width anyway
    keep = np.ones(th.shape[0], dtype=bool)
    keep[1:] = np.diff(th) > 1e-12
    return th[keep]


def region_nodes(
    poly: ConvexPolygon,
    center,
    r_lo: float = 0.0,
    r_hi: float = math.inf,
    n_theta: int = 10,
    n_r: int = 8,
) -> RegionNodes:
    """Nodes for ∫ over poly ∩ {r_lo <= |y - center| <= r_hi}.

    The center may be inside or outside the polygon. Slices whose radial
    band is empty contribute zero-width (hence zero-weight) nodes and are
    dropped.
    """
    center = _as_point(center)
    if r_lo < 0 or r_hi <= r_lo:
        raise GeometryError(f"bad radial band [{r_lo}, {r_hi}]")
    th_break = _slice_angles(poly, center, [r_lo, r_hi])
    normals, offsets = poly.edge_normals()
    off = offsets - normals @ center

    rel = poly.vertices - center
    scale = float(np.max(np.hypot(rel[:, 0], rel[:, 1]))) + 1e-300
    if math.isinf(r_hi):
        # the radial extent of a convex polygon is attained at a vertex
        r_hi = scale * (1.0 + 1e-12)

    gx_t, gw_t = _gl(n_theta)
    gx_r, gw_r = _gl(n_r)

    starts = th_break
    ends = np.roll(th_break, -1).copy()
    ends[-1] += _TWO_PI
    widths = ends - starts

    pts_parts, rad_parts, w_parts = [], [], []
    for a, width in zip(starts, widths):
        if width <= 1e-12:
            continue
        theta = a + 0.5 * width * (gx_t + 1.0)
        wt = 0.5 * width * gw_t
        ux, uy = np.cos(theta), np.sin(theta)
        dots = np.outer(ux, normals[:, 0]) + np.outer(uy, normals[:, 1])  # (K, E)
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = off[None, :] / dots
        upper = np.where(dots > 1e-14, bound, math.inf)
        lower = np.where(dots < -1e-14, bound, 0.0)
        t_hi = np.min(upper, axis=1)
        t_lo = np.maximum(np.max(lower, axis=1), 0.0)
        # a ray parallel to an edge it lies outside of misses the polygon
        parallel_out = np.any((np.abs(dots) <= 1e-14) & (off[None, :] < -1e-13 * scale), axis=1)
        lo = np.maximum(t_lo, r_lo)
        hi = np.minimum(t_hi, r_hi)
        span = np.where(parallel_out, 0.0, np.maximum(hi - lo, 0.0))
        if not np.any(span > 0):
            continue
        r = lo[:, None] + 0.5 * span[:, None] * (gx_r[None, :] + 1.0)  # (K, Kr)
        w = (wt * 0.5 * span)[:, None] * gw_r[None, :] * r
        px = center[0] + r * ux[:, None]
        py = center[1] + r * uy[:, None]
        pts_parts.append(np.column_stack([px.ravel(), py.ravel()]))
        rad_parts.append(r.ravel())
        w_parts.append(w.ravel())

    if not pts_parts:
        return _EMPTY_NODES
    return RegionNodes(
        points=np.concatenate(pts_parts, axis=0),
        radii=np.concatenate(rad_parts),
        weights=np.concatenate(w_parts),
    )


def region_nodes_banded(
    poly: ConvexPolygon,
    center,
    bands: Sequence[tuple[float, float]],
    n_theta: int = 10,
    n_r: int = 8,
) -> RegionNodes:
    """Concatenated nodes over several radial bands (for piecewise profiles)."""
    return RegionNodes.concat(
        region_nodes(poly, center, lo, hi, n_theta, n_r) for lo, hi in bands
    )


def annulus_nodes(
    center, r_lo: float, r_hi: float, n_theta: int = 64, n_r: int = 32
) -> RegionNodes:
    center = _as_point(center)
    if not (0 <= r_lo < r_hi) or not math.isfinite(r_hi):
        raise GeometryError(f"bad annulus radii [{r_lo}, {r_hi}]")
    theta = _TWO_PI * (np.arange(n_theta) + 0.5) / n_theta
    gx, gw = _gl(n_r)
    r = r_lo + 0.5 * (r_hi - r_lo) * (gx + 1.0)
    wr = 0.5 * (r_hi - r_lo) * gw * r
    ux, uy = np.cos(theta), np.sin(theta)
    px = center[0] + np.outer(ux, r)
    py = center[1] + np.outer(uy, r)
    rad = np.broadcast_to(r, (n_theta, n_r))
    w = np.broadcast_to(wr, (n_theta, n_r)) * (_TWO_PI / n_theta)
    return RegionNodes(
        points=np.column_stack([px.ravel(), py.ravel()]),
        radii=rad.ravel().copy(),
        weights=w.ravel().copy(),
    )


def annulus_nodes_banded(
    center, bands: Sequence[tuple[float, float]], n_theta: int = 64, n_r: int = 32
) -> RegionNodes:
    return RegionNodes.concat(
        annulus_nodes(center, lo, hi, n_theta, n_r) for lo, hi in bands if hi > lo
    )


def converge(
    estimate,
    orders: Sequence[tuple[int, int]],
    abs_tol: float,
    rel_tol: float = 1e-8,
    what: str = "integral",
):
    """Run ``estimate(n_theta, n_r)`` through increasing orders until two
    consecutive values agree within tolerance. Returns the last value.

    Vector-valued estimates are compared in the max norm.
    """
    if len(orders) < 2:
        raise ValueError("need at least two order levels to check agreement")
    prev = None
    diff = math.nan
    for nt, nr in orders:
        val = estimate(nt, nr)
        if prev is not None:
            diff = float(np.max(np.abs(np.asarray(val) - np.asarray(prev))))
            bar = max(abs_tol, rel_tol * float(np.max(np.abs(np.asarray(val)))))
            if diff <= bar:
                return val
        prev = val
    raise QuadratureError(
        f"{what} did not converge through orders {list(orders)}; last change "
        f"{diff:.3e} exceeds tolerance"
    )
