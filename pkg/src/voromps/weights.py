"""Radial interaction weights and their clipped-region norms.

A weight is a nonnegative radial profile supported on the closed annulus
delta <= r <= h around the evaluation point. The truncation-error constants
are ratios of weighted-area integrals over three region shapes: ball minus
ball (closed form), focal cell minus ball, and ball minus focal cell (both
via the polar engine). Moments are one-dimensional integrals with exact
primitives for the built-in polynomial profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _sci_integrate

from .errors import WeightError
from .geometry import Annulus, ConvexPolygon, cell_annulus_area, disk_samples, neighbor_sets
from .quadrature import (
    annulus_nodes_banded,
    converge,
    region_nodes_banded,
)

FloatArray = np.ndarray

_REGION_ORDERS = [(12, 10), (24, 20), (48, 40), (96, 80)]
_ANNULUS_ORDERS = [(64, 32), (128, 64), (256, 128)]


@dataclass(frozen=True)
class WeightFunction:
    """Radial weight ŵ(|z|) supported on delta <= |z| <= h.

    ``poly`` holds polynomial coefficients of the profile in increasing
    powers of r when a closed-form radial primitive exists; otherwise
    moments fall back to adaptive quadrature split at the profile's
    breakpoints.
    """

    name: str
    delta: float
    h: float
    lipschitz: float
    profile: Callable[[FloatArray], FloatArray]
    breakpoints: tuple[float, ...] = ()
    poly: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (0 < self.delta < self.h) or not math.isfinite(self.h):
            raise WeightError(
                f"support radii must satisfy 0 < delta < h, got {self.delta}, {self.h}"
            )
        if not (self.lipschitz >= 0 and math.isfinite(self.lipschitz)):
            raise WeightError(f"bad Lipschitz constant {self.lipschitz}")
        for b in self.breakpoints:
            if not (self.delta < b < self.h):
                raise WeightError(f"breakpoint {b} outside the open support")

    def value(self, r):
        """Profile at radius r, zero outside the closed support annulus."""
        arr = np.atleast_1d(np.asarray(r, dtype=float))
        mask = (arr >= self.delta) & (arr <= self.h)
        out = np.zeros_like(arr)
        if np.any(mask):
            out[mask] = self.profile(arr[mask])
        if np.ndim(r) == 0:
            return float(out[0])
        return out

    def radial_bands(self) -> list[tuple[float, float]]:
        """Support split at profile breakpoints; quadrature panels follow these."""
        edges = [self.delta, *self.breakpoints, self.h]
        return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]

    def radial_integral(self, lo: float, hi: float, n: int = 0) -> float:
        """∫ r^(n+1) ŵ(r) dr over [lo, hi] clipped to the support."""
        lo = max(lo, self.delta)
        hi = min(hi, self.h)
        if hi <= lo:
            return 0.0
        if self.poly is not None:
            return _poly_radial_integral(self.poly, n, lo, hi)
        interior = [b for b in self.breakpoints if lo < b < hi]
        val, _ = _sci_integrate.quad(
            lambda r: r ** (n + 1) * float(self.profile(np.array([r]))[0]),
            lo,
            hi,
            points=interior or None,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
        )
        return float(val)


def _poly_radial_integral(coeffs: Sequence[float], n: int, lo: float, hi: float) -> float:
    total = 0.0
    for j, c in enumerate(coeffs):
        if c == 0.0:
            continue
        e = n + 1 + j
        if e == -1:
            total += c * math.log(hi / lo)
        else:
            total += c * (hi ** (e + 1) - lo ** (e + 1)) / (e + 1)
    return total


def indicator_weight(delta: float, h: float) -> WeightFunction:
    return WeightFunction(
        name="indicator",
        delta=delta,
        h=h,
        lipschitz=0.0,
        profile=lambda r: np.ones_like(r),
        poly=(1.0,),
    )


def linear_taper_weight(delta: float, h: float) -> WeightFunction:
    """Profile (h - r)/(h - delta): value 1 at the inner edge, 0 at the outer."""
    if not (0 < delta < h):
        raise WeightError(f"support radii must satisfy 0 < delta < h, got {delta}, {h}")
    span = h - delta
    return WeightFunction(
        name="linear_taper",
        delta=delta,
        h=h,
        lipschitz=1.0 / span,
        profile=lambda r: (h - r) / span,
        poly=(h / span, -1.0 / span),
    )


def custom_radial_weight(
    delta: float,
    h: float,
    profile=None,
    table: tuple[Sequence[float], Sequence[float]] | None = None,
    lipschitz: float | None = None,
    name: str = "custom",
) -> WeightFunction:
    """Weight from a callable profile or an (r, w) table.

    Table profiles interpolate linearly between knots and clamp to the end
    values outside the knot range. The Lipschitz constant, when not given,
    is a finite-difference estimate on a dense grid with 5% headroom.
    """
    if (profile is None) == (table is None):
        raise WeightError("give exactly one of profile= or table=")
    breakpoints: tuple[float, ...] = ()
    if table is not None:
        knots = np.asarray(table[0], dtype=float)
        vals = np.asarray(table[1], dtype=float)
        if knots.ndim != 1 or knots.shape != vals.shape or knots.size < 2:
            raise WeightError("table needs matching 1-d radius and value arrays")
        if np.any(np.diff(knots) <= 0):
            raise WeightError("table radii must be strictly increasing")
        if np.any(vals < 0):
            bad = float(knots[np.argmin(vals)])
            raise WeightError(f"negative weight value at r={bad:.6g}")
        if not np.all(np.isfinite(vals)):
            raise WeightError("non-finite weight value in table")
        breakpoints = tuple(float(r) for r in knots if delta < r < h)

        def profile(r, _k=knots, _v=vals):
            return np.interp(r, _k, _v)

    grid = np.linspace(delta, h, 10_001)
    on_grid = np.asarray(profile(grid), dtype=float)
    if on_grid.shape != grid.shape:
        raise WeightError("profile must map radii elementwise")
    if not np.all(np.isfinite(on_grid)):
        raise WeightError("profile produced non-finite values on the support")
    if np.any(on_grid < 0):
        bad = float(grid[int(np.argmin(on_grid))])
        raise WeightError(f"negative weight value at r={bad:.6g}")
    if lipschitz is None:
        slopes = np.abs(np.diff(on_grid)) / np.diff(grid)
        lipschitz = float(slopes.max() * 1.05) if slopes.size else 0.0
    return WeightFunction(
        name=name,
        delta=delta,
        h=h,
        lipschitz=float(lipschitz),
        profile=profile,
        breakpoints=breakpoints,
    )


def radial_moment(w: WeightFunction, n: int) -> float:
    """∫ |z|^n w(z) dz over the plane = 2π ∫ r^(n+1) ŵ(r) dr."""
    return 2.0 * math.pi * w.radial_integral(w.delta, w.h, n)


# ---------------------------------------------------------------------------
# clipped-region norms


@dataclass(frozen=True)
class BallMinusBall:
    """Annulus inner < |z| < outer around the evaluation point."""

    outer: float
    inner: float


@dataclass(frozen=True)
class CellMinusBall:
    """Focal cell with the ball |z - center| < inner removed."""

    cell: ConvexPolygon
    inner: float
    center: FloatArray


@dataclass(frozen=True)
class BallMinusCell:
    """Ball |z - center| < outer with the focal cell removed."""

    outer: float
    cell: ConvexPolygon
    center: FloatArray


def _bands_within(w: WeightFunction, lo: float, hi: float) -> list[tuple[float, float]]:
    lo = max(lo, w.delta)
    hi = min(hi, w.h)
    return [(max(a, lo), min(b, hi)) for a, b in w.radial_bands() if min(b, hi) > max(a, lo)]


def annular_l1_norm(w: WeightFunction, region, moment: int = 0) -> float:
    """∫ over the region of |z|^moment * w(z), z relative to the center.

    Radii beyond the support are clipped exactly: the weight vanishes there,
    so a nominal outer radius above h changes nothing.
    """
    if isinstance(region, BallMinusBall):
        if not (0 <= region.inner < region.outer):
            raise WeightError(f"bad annulus radii {region.inner}, {region.outer}")
        return 2.0 * math.pi * w.radial_integral(region.inner, region.outer, moment)

    if isinstance(region, CellMinusBall):
        bands = _bands_within(w, region.inner, math.inf)
        if not bands:
            return 0.0
        reference = radial_moment(w, max(moment, 0)) + 1e-300

        def estimate(nt, nr):
            nodes = region_nodes_banded(region.cell, region.center, bands, nt, nr)
            if nodes.n == 0:
                return 0.0
            return nodes.integrate(w.value(nodes.radii) * nodes.radii**moment)

        return float(
            converge(
                estimate,
                _REGION_ORDERS,
                abs_tol=1e-13 * reference,
                rel_tol=1e-9,
                what=f"norm over cell minus ball ({w.name}, moment {moment})",
            )
        )

    if isinstance(region, BallMinusCell):
        bands = _bands_within(w, 0.0, region.outer)
        if not bands:
            return 0.0
        reference = radial_moment(w, max(moment, 0)) + 1e-300

        def estimate(nt, nr):
            ann = annulus_nodes_banded(region.center, bands, max(nt * 6, 48), nr)
            full = ann.integrate(w.value(ann.radii) * ann.radii**moment)
            cut = region_nodes_banded(region.cell, region.center, bands, nt, nr)
            if cut.n:
                full -= cut.integrate(w.value(cut.radii) * cut.radii**moment)
            return full

        return float(
            converge(
                estimate,
                _REGION_ORDERS,
                abs_tol=1e-13 * reference,
                rel_tol=1e-9,
                what=f"norm over ball minus cell ({w.name}, moment {moment})",
            )
        )

    raise TypeError(f"unknown region {type(region).__name__}")


# ---------------------------------------------------------------------------
# positivity of the averaging denominator


@dataclass(frozen=True)
class PositivityReport:
    c0: float
    integral_min: float
    discrete_min: float
    n_samples: int


def check_positivity(
    w: WeightFunction, decomp, k: int, samples: int = 25
) -> PositivityReport:
    """Lower bound c0 for both neighbor sums over the focal delta-ball.

    Evaluates the cell-integral form and the discrete cell-area form of the
    averaging denominator at the focal site plus low-discrepancy points of
    B_delta(a_k) and takes the worst value. Raises if it is not positive:
    every bound downstream divides by it.
    """
    site = decomp.sites[k]
    pts = np.vstack([site[None, :], disk_samples(site, w.delta, max(samples - 1, 0))])
    bands = w.radial_bands()
    integral_min = math.inf
    discrete_min = math.inf
    for x in pts:
        _, idx = neighbor_sets(decomp, x, w.h, focal=k)
        s_int = 0.0
        s_disc = 0.0
        for i in idx:
            cell = decomp.cells[i]
            nodes = region_nodes_banded(cell, x, bands, n_theta=16, n_r=12)
            if nodes.n:
                s_int += float(nodes.integrate(w.value(nodes.radii)))
            dist = float(np.hypot(*(np.asarray(x) - decomp.sites[i])))
            area = cell_annulus_area(cell, Annulus(x, w.delta, w.h))
            s_disc += area * w.value(dist)
        integral_min = min(integral_min, s_int)
        discrete_min = min(discrete_min, s_disc)
    c0 = min(integral_min, discrete_min)
    if not (c0 > 0):
        raise WeightError(
            f"averaging denominator not positive over the focal delta-ball "
            f"(min {c0:.6g}); configuration too sparse for weight {w.name!r}"
        )
    return PositivityReport(
        c0=c0,
        integral_min=integral_min,
        discrete_min=discrete_min,
        n_samples=pts.shape[0],
    )


# ---------------------------------------------------------------------------
# symmetry diagnostics used by the moment-identity checks


def annulus_vector_moment(w: WeightFunction, n: int) -> FloatArray:
    """∫ z |z|^n w(z) dz, exactly zero by symmetry; computed for verification."""
    nodes = annulus_nodes_banded(np.zeros(2), w.radial_bands(), 256, 64)
    vals = w.value(nodes.radii) * nodes.radii**n
    return nodes.integrate(nodes.points * vals[:, None])


def annulus_tensor_moment(w: WeightFunction, n: int) -> FloatArray:
    """∫ z ⊗ z |z|^n w(z) dz; isotropy makes it (m_{n+2}/2) times the identity."""
    nodes = annulus_nodes_banded(np.zeros(2), w.radial_bands(), 256, 64)
    vals = w.value(nodes.radii) * nodes.radii**n
    x, y = nodes.points[:, 0], nodes.points[:, 1]
    outer = np.stack([x * x, x * y, x * y, y * y], axis=1)
    flat = nodes.integrate(outer * vals[:, None])
    return flat.reshape(2, 2)
