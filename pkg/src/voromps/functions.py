"""Scalar fields with exact derivatives and certified derivative bounds.

The error estimates are checked against fields whose gradient, Laplacian,
and derivative maxima over the padded box are known in closed form. Each
``seminorms`` entry is the max over multi-indices of that order of the sup
of |D^alpha f| over the closed padded rectangle; the catalog values are true
upper bounds (verified on a grid by the tests, and re-checkable via
``grid_seminorm``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import DomainSpec

FloatArray = np.ndarray

# sup over the line of |u exp(-u^2/2)| and |(u^3 - 3u) exp(-u^2/2)|,
# rounded up in the last kept digit
_HERMITE1_MAX = 0.60654
_HERMITE3_MAX = 1.38014


def _pts(x) -> FloatArray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected points of shape (M, 2), got {a.shape}")
    return a


@dataclass(frozen=True)
class ScalarField:
    name: str
    fn: Callable[[FloatArray], FloatArray]
    grad_fn: Callable[[FloatArray], FloatArray]
    lap_fn: Callable[[FloatArray], FloatArray]
    deriv_fn: Callable[[tuple[int, int], FloatArray], FloatArray]
    seminorms: tuple[float, float, float, float]

    def __call__(self, x):
        a = _pts(x)
        out = self.fn(a)
        return float(out[0]) if np.ndim(x) == 1 else out

    def gradient(self, x) -> FloatArray:
        return self.grad_fn(_pts(x))[0]

    def laplacian(self, x) -> float:
        return float(self.lap_fn(_pts(x))[0])

    def derivative(self, alpha: tuple[int, int], x):
        i, j = alpha
        if i < 0 or j < 0 or i + j > 3:
            raise ValueError(f"derivative order {alpha} not available")
        a = _pts(x)
        out = self.deriv_fn((i, j), a)
        return float(out[0]) if np.ndim(x) == 1 else out

    def seminorm(self, order: int) -> float:
        if not 0 <= order <= 3:
            raise ValueError(f"seminorm order {order} out of range")
        return self.seminorms[order]


def _field_from_derivs(name, deriv_fn, seminorms):
    def fn(a):
        return deriv_fn((0, 0), a)

    def grad_fn(a):
        return np.stack([deriv_fn((1, 0), a), deriv_fn((0, 1), a)], axis=1)

    def lap_fn(a):
        return deriv_fn((2, 0), a) + deriv_fn((0, 2), a)

    return ScalarField(
        name=name,
        fn=fn,
        grad_fn=grad_fn,
        lap_fn=lap_fn,
        deriv_fn=deriv_fn,
        seminorms=tuple(float(s) for s in seminorms),
    )


def _const_field():
    def deriv(alpha, a):
        return np.ones(a.shape[0]) if alpha == (0, 0) else np.zeros(a.shape[0])

    return _field_from_derivs("const", deriv, (1.0, 0.0, 0.0, 0.0))


def _coord_field(axis: int, domain: DomainSpec):
    lo, hi = domain.omega_h_min[axis], domain.omega_h_max[axis]
    c0 = max(abs(lo), abs(hi))
    unit = (1, 0) if axis == 0 else (0, 1)

    def deriv(alpha, a):
        if alpha == (0, 0):
            return a[:, axis].copy()
        if alpha == unit:
            return np.ones(a.shape[0])
        return np.zeros(a.shape[0])

    return _field_from_derivs(f"coord_x{axis + 1}", deriv, (c0, 1.0, 0.0, 0.0))


def _quadratic_field(domain: DomainSpec):
    c = domain.center
    half = np.maximum(
        np.abs(domain.omega_h_min - c), np.abs(domain.omega_h_max - c)
    )
    c0 = float(half[0] ** 2 + half[1] ** 2)
    c1 = 2.0 * float(max(half))

    def deriv(alpha, a):
        dx, dy = a[:, 0] - c[0], a[:, 1] - c[1]
        if alpha == (0, 0):
            return dx**2 + dy**2
        if alpha == (1, 0):
            return 2.0 * dx
        if alpha == (0, 1):
            return 2.0 * dy
        if alpha in ((2, 0), (0, 2)):
            return np.full(a.shape[0], 2.0)
        return np.zeros(a.shape[0])

    return _field_from_derivs("quadratic", deriv, (c0, c1, 2.0, 0.0))


def _sincos_field():
    def deriv(alpha, a):
        i, j = alpha
        # every x1-derivative shifts the sine phase by pi/2, same for cosine
        return np.sin(a[:, 0] + i * math.pi / 2) * np.cos(a[:, 1] + j * math.pi / 2)

    return _field_from_derivs("sincos", deriv, (1.0, 1.0, 1.0, 1.0))


_HERMITE = {
    0: lambda u: np.ones_like(u),
    1: lambda u: u,
    2: lambda u: u * u - 1.0,
    3: lambda u: u * (u * u - 3.0),
}


def _gaussian_field(domain: DomainSpec):
    c = domain.center
    width = float(np.max(domain.omega_h_max - domain.omega_h_min))
    s = width / 6.0

    def deriv(alpha, a):
        i, j = alpha
        u1 = (a[:, 0] - c[0]) / s
        u2 = (a[:, 1] - c[1]) / s
        sign = -1.0 if (i + j) % 2 else 1.0
        return (
            sign
            * s ** (-(i + j))
            * _HERMITE[i](u1)
            * _HERMITE[j](u2)
            * np.exp(-0.5 * (u1**2 + u2**2))
        )

    return _field_from_derivs(
        "gaussian",
        deriv,
        (1.0, _HERMITE1_MAX / s, 1.0 / s**2, _HERMITE3_MAX / s**3),
    )


FIELD_NAMES = ("const", "coord_x1", "coord_x2", "quadratic", "sincos", "gaussian")


def make_field(name: str, domain: DomainSpec) -> ScalarField:
    if name == "const":
        return _const_field()
    if name == "coord_x1":
        return _coord_field(0, domain)
    if name == "coord_x2":
        return _coord_field(1, domain)
    if name == "quadratic":
        return _quadratic_field(domain)
    if name == "sincos":
        return _sincos_field()
    if name == "gaussian":
        return _gaussian_field(domain)
    raise ValueError(f"unknown field {name!r}; choose from {FIELD_NAMES}")


def field_catalog(domain: DomainSpec) -> dict[str, ScalarField]:
    return {name: make_field(name, domain) for name in FIELD_NAMES}


def grid_seminorm(field: ScalarField, domain: DomainSpec, order: int, n: int = 256) -> float:
    """Max of |D^alpha f| over an n x n grid of the closed padded box.

    A lower bound on the true sup; the catalog's claimed seminorms must
    dominate it.
    """
    xs = np.linspace(domain.omega_h_min[0], domain.omega_h_max[0], n)
    ys = np.linspace(domain.omega_h_min[1], domain.omega_h_max[1], n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    worst = 0.0
    for i in range(order + 1):
        j = order - i
        worst = max(worst, float(np.max(np.abs(field.deriv_fn((i, j), pts)))))
    return worst
