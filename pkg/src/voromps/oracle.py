"""Slow, independent integral estimators used to cross-check the fast paths.

Nothing in here is clever on purpose: Monte Carlo over a bounding box and a
midpoint tensor grid. The production quadrature lives elsewhere; these exist
so tests can compare against an estimator whose failure modes are unrelated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

FloatArray = np.ndarray


@dataclass(frozen=True)
class OracleEstimate:
    """Estimate plus a self-declared uncertainty.

    For Monte Carlo, ``error`` is one standard error of the mean. For the
    midpoint grid it is the observed shift under a resolution halving, which
    over-reports the true discretization error of the finer grid.
    """

    value: float
    error: float
    n: int
    seed: int | None = None


def _unit_samples(n: int, seed: int) -> FloatArray:
    # Philox is counter-based: the stream depends only on (seed, index),
    # so estimates are reproducible bit for bit across platforms.
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.random((n, 2))


def mc_region_integral(
    integrand: Callable[[FloatArray], FloatArray],
    bbox: tuple[float, float, float, float],
    n: int = 100_000,
    seed: int = 0,
) -> OracleEstimate:
    """Monte Carlo estimate of an integral over a bounding box.

    ``integrand`` receives an (n, 2) array and must return (n,) values; it is
    responsible for vanishing outside whatever region it represents. ``bbox``
    is (xmin, xmax, ymin, ymax).
    """
    xmin, xmax, ymin, ymax = bbox
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"empty bounding box {bbox!r}")
    pts = _unit_samples(n, seed)
    pts[:, 0] = xmin + (xmax - xmin) * pts[:, 0]
    pts[:, 1] = ymin + (ymax - ymin) * pts[:, 1]
    vals = np.asarray(integrand(pts), dtype=float)
    if vals.shape != (n,):
        raise ValueError(f"integrand returned shape {vals.shape}, expected ({n},)")
    area = (xmax - xmin) * (ymax - ymin)
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / np.sqrt(n))
    return OracleEstimate(value=mean * area, error=sem * area, n=n, seed=seed)


def grid_integral(
    integrand: Callable[[FloatArray], FloatArray],
    bbox: tuple[float, float, float, float],
    resolution: int = 512,
) -> OracleEstimate:
    """Midpoint-rule tensor-grid estimate over a bounding box.

    The declared ``error`` is |value at full resolution - value at half
    resolution|; halving again should move the result by well under 4x that.
    """
    if resolution < 4 or resolution % 2:
        raise ValueError("resolution must be an even integer >= 4")
    fine = _midpoint_sum(integrand, bbox, resolution)
    coarse = _midpoint_sum(integrand, bbox, resolution // 2)
    return OracleEstimate(value=fine, error=abs(fine - coarse), n=resolution)


def _midpoint_sum(
    integrand: Callable[[FloatArray], FloatArray],
    bbox: tuple[float, float, float, float],
    resolution: int,
) -> float:
    xmin, xmax, ymin, ymax = bbox
    xs = xmin + (xmax - xmin) * (np.arange(resolution) + 0.5) / resolution
    ys = ymin + (ymax - ymin) * (np.arange(resolution) + 0.5) / resolution
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    vals = np.asarray(integrand(pts), dtype=float)
    cell = (xmax - xmin) * (ymax - ymin) / resolution**2
    return float(vals.sum() * cell)
