"""Computable budgets for the operator truncation errors.

Twelve geometry-and-weight constants turn the error estimates into concrete
inequalities. Each is a ratio of clipped-region weight norms (plus, for some,
discrete neighbor sums), reported with its ingredients so a surprising value
can be traced. ``operator_budget`` assembles them into the per-operator
right-hand side, a small polynomial in the field's derivative bounds;
``link_budget`` does the same for the individual stage-to-stage links.

``reference_budgets`` gives the closed forms these collapse to for the
indicator weight on a near-uniform cloud (inner exclusion half the cell
radius, interaction radius a fixed multiple of it), together with the two
worked parameter regimes used by the command-line table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateConfigurationError
from .weights import (
    BallMinusCell,
    CellMinusBall,
    annular_l1_norm,
    radial_moment,
)

OPERATOR_KINDS = ("pi", "grad", "laplace", "box")

_LAPLACE_NOTE = (
    "the Laplacian budget includes the Lipschitz-correction constant of the "
    "cell-frozen stage alongside the moment-ratio constants"
)


@dataclass(frozen=True)
class BoundConstant:
    value: float
    parts: dict[str, float]


@dataclass(frozen=True)
class ConstantsBundle:
    h: float
    delta: float
    r_sigma: float
    lam: float | None
    lipschitz: float
    constants: dict[str, BoundConstant]
    notes: tuple[str, ...] = ()

    def value(self, name: str) -> float:
        try:
            return self.constants[name].value
        except KeyError:
            raise DegenerateConfigurationError(
                f"constant {name!r} unavailable (was a neighborhood fraction "
                "lambda supplied to the context?)"
            ) from None


def compute_constants(ctx) -> ConstantsBundle:
    """Evaluate every bound constant available for this context.

    The averaging constants need no neighborhood fraction; the gradient and
    Laplacian families do, so those entries appear only when the context
    carries lambda.
    """
    w = ctx.weight
    h, delta = ctx.h, ctx.delta
    r_sigma = ctx.r_sigma
    lam = ctx.lam
    cell = ctx.decomp.cells[ctx.k]
    site = ctx.site

    m0 = radial_moment(w, 0)
    m1 = radial_moment(w, 1)
    m2 = radial_moment(w, 2)
    cell_0 = annular_l1_norm(w, CellMinusBall(cell, delta, site), 0)
    cell_1 = annular_l1_norm(w, CellMinusBall(cell, delta, site), 1)
    cell_inv = annular_l1_norm(w, CellMinusBall(cell, delta, site), -1)
    bh_0 = annular_l1_norm(w, BallMinusCell(h, cell, site), 0)
    bh_1 = annular_l1_norm(w, BallMinusCell(h, cell, site), 1)
    bh_2 = annular_l1_norm(w, BallMinusCell(h, cell, site), 2)
    bh_inv = annular_l1_norm(w, BallMinusCell(h, cell, site), -1)

    for name, val in (("ball norm", m0), ("ball-minus-cell norm", bh_0),
                      ("second-moment norm", bh_2)):
        if not (val > 0):
            raise DegenerateConfigurationError(
                f"{name} is {val:.3e}; bound constants undefined here"
            )

    lip = w.lipschitz
    c: dict[str, BoundConstant] = {}
    notes: list[str] = []

    c["c1"] = BoundConstant(cell_0 / m0, {"cell_norm": cell_0, "ball_norm": m0})
    c2_val = math.pi * lip * r_sigma * h**2 / bh_0
    c["c2"] = BoundConstant(
        c2_val, {"lipschitz": lip, "r_sigma": r_sigma, "outside_cell_norm": bh_0}
    )

    if lam is not None:
        p_nominal = lam * h + r_sigma
        p_out = min(p_nominal, h)
        if p_nominal > h:
            notes.append(
                f"outer radius {p_nominal:.6g} exceeds the support radius "
                f"{h:.6g}; clipped exactly (the weight vanishes beyond its support)"
            )
        bp_0 = annular_l1_norm(w, BallMinusCell(p_out, cell, site), 0)
        bp_inv = annular_l1_norm(w, BallMinusCell(p_out, cell, site), -1)

        c["c3"] = BoundConstant(
            bp_0 / bh_0, {"extended_norm": bp_0, "outside_cell_norm": bh_0}
        )
        c4_val = (cell_1 / m2) * (1.0 + r_sigma * m1 / bh_2)
        c["c4"] = BoundConstant(
            c4_val,
            {
                "cell_first_moment": cell_1,
                "ball_second_moment": m2,
                "correction": 1.0 + r_sigma * m1 / bh_2,
            },
        )
        c["c5"] = BoundConstant(
            (r_sigma / (lam * h)) * bh_1 / bh_2,
            {"first_moment": bh_1, "second_moment": bh_2},
        )
        c["c6"] = BoundConstant(
            r_sigma * bp_0 / bh_2, {"extended_norm": bp_0, "second_moment": bh_2}
        )
        ratio_12 = ctx.s1 / ctx.s2
        c["c7"] = BoundConstant(
            (2.0 * r_sigma * h * bh_0 / bh_2) * ratio_12,
            {"outside_cell_norm": bh_0, "second_moment": bh_2, "site_moment_ratio": ratio_12},
        )
        c["c8"] = BoundConstant(
            (math.pi * lip * r_sigma * h**3 / bh_2) * (1.0 + h * ratio_12),
            {"lipschitz": lip, "second_moment": bh_2, "site_moment_ratio": ratio_12},
        )
        c9_val = cell_inv / m0 + (cell_0 / m0) * (bh_inv / bh_0)
        c["c9"] = BoundConstant(
            c9_val,
            {
                "cell_inverse_moment": cell_inv,
                "ball_norm": m0,
                "outside_inverse_moment": bh_inv,
            },
        )
        c["c10"] = BoundConstant(
            (r_sigma / (lam * h)) * bh_inv / bh_0,
            {"inverse_moment": bh_inv, "outside_cell_norm": bh_0},
        )
        c["c11"] = BoundConstant(
            bp_inv / bh_0, {"extended_inverse_moment": bp_inv, "outside_cell_norm": bh_0}
        )
        near_ratio = ctx.lam_inv_sum / ctx.s0
        c12_val = (math.pi * lip / bh_0) * (
            2.0 * r_sigma * h / lam + p_nominal**2 + r_sigma * h**2 * near_ratio
        )
        c["c12"] = BoundConstant(
            c12_val,
            {"lipschitz": lip, "outside_cell_norm": bh_0, "near_site_ratio": near_ratio},
        )

    return ConstantsBundle(
        h=h,
        delta=delta,
        r_sigma=r_sigma,
        lam=lam,
        lipschitz=lip,
        constants=c,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# assembled budgets


@dataclass(frozen=True)
class BoundReport:
    kind: str
    coefficients: dict[int, float]
    constants: ConstantsBundle
    notes: tuple[str, ...] = ()

    def rhs(self, seminorms: Sequence[float]) -> float:
        return sum(coeff * seminorms[order] for order, coeff in self.coefficients.items())

    def to_dict(self) -> dict:
        return {
            "operator": self.kind,
            "coefficients": {str(k): v for k, v in sorted(self.coefficients.items())},
            "constants": {
                name: {"value": bc.value, "parts": bc.parts}
                for name, bc in sorted(self.constants.constants.items())
            },
            "notes": list(self.notes) + list(self.constants.notes),
        }


def operator_budget(kind: str, bundle: ConstantsBundle) -> BoundReport:
    """Full error budget for one operator: coefficient per derivative order."""
    h, r_sigma, lam = bundle.h, bundle.r_sigma, bundle.lam
    v = bundle.value
    if kind == "pi":
        coeffs = {1: h + r_sigma, 0: 2.0 * v("c1") + 2.0 * v("c2")}
        return BoundReport(kind, coeffs, bundle)
    if lam is None:
        raise DegenerateConfigurationError(
            f"budget for {kind!r} needs the neighborhood fraction lambda"
        )
    if kind == "grad":
        coeffs = {
            2: 4.0 * h,
            1: 8.0 * r_sigma / (lam * h)
            + 4.0 * v("c1")
            + 4.0 * v("c2")
            + 8.0 * v("c3"),
        }
        return BoundReport(kind, coeffs, bundle)
    if kind == "laplace":
        coeffs = {
            3: 24.0 * h,
            1: 4.0 * (v("c4") + v("c5") + v("c6") + v("c7")) + 4.0 * v("c8"),
        }
        return BoundReport(kind, coeffs, bundle, notes=(_LAPLACE_NOTE,))
    if kind == "box":
        coeffs = {
            3: 24.0 * h,
            1: 4.0 * v("c9") + 12.0 * v("c10") + 12.0 * v("c11") + 4.0 * v("c12"),
        }
        return BoundReport(kind, coeffs, bundle)
    raise ValueError(f"unknown operator kind {kind!r}")


def link_budget(kind: str, link: str, bundle: ConstantsBundle, seminorms) -> float:
    """Budget for one stage-to-stage link of the operator chain."""
    h, r_sigma, lam = bundle.h, bundle.r_sigma, bundle.lam
    v = bundle.value
    s = seminorms
    table = {
        ("pi", "exact_to_continuous"): lambda: h * s[1],
        ("pi", "continuous_to_hat"): lambda: 2.0 * v("c1") * s[0],
        ("pi", "hat_to_breve"): lambda: r_sigma * s[1] + v("c2") * s[0],
        ("pi", "breve_to_tilde"): lambda: v("c2") * s[0],
        ("grad", "exact_to_continuous"): lambda: 4.0 * h * s[2],
        ("grad", "continuous_to_hat"): lambda: 4.0 * v("c1") * s[1],
        ("grad", "hat_to_breve"): lambda: 8.0
        * (r_sigma / (lam * h) + v("c3"))
        * s[1],
        ("grad", "breve_to_tilde"): lambda: 4.0 * v("c2") * s[1],
        ("laplace", "exact_to_continuous"): lambda: 24.0 * h * s[3],
        ("laplace", "continuous_to_hat"): lambda: 4.0 * v("c4") * s[1],
        ("laplace", "hat_to_breve"): lambda: 4.0 * (v("c5") + v("c6")) * s[1],
        ("laplace", "breve_to_tilde"): lambda: 4.0 * (v("c7") + v("c8")) * s[1],
        ("box", "exact_to_continuous"): lambda: 24.0 * h * s[3],
        ("box", "continuous_to_hat"): lambda: 4.0 * v("c9") * s[1],
        ("box", "hat_to_breve"): lambda: 12.0 * (v("c10") + v("c11")) * s[1],
        ("box", "breve_to_tilde"): lambda: 4.0 * v("c12") * s[1],
    }
    try:
        make = table[(kind, link)]
    except KeyError:
        raise ValueError(f"unknown chain link {(kind, link)!r}") from None
    if kind != "pi" and lam is None:
        raise DegenerateConfigurationError(
            f"link budget for {kind!r} needs the neighborhood fraction lambda"
        )
    return make()


# ---------------------------------------------------------------------------
# closed forms for the indicator weight on a near-uniform cloud


def reference_budgets(c_star: float, lam: float, r_sigma: float) -> dict[str, dict[int, float]]:
    """Budget coefficients when the weight is the indicator, the inner
    exclusion is half the cell radius, and h = c_star * r_sigma.

    Valid for any c_star > 1/2; the two worked regimes below specialize it.
    """
    if not (c_star > 0.5):
        raise ValueError(f"radius multiple must exceed 1/2, got {c_star}")
    if not (0 < lam <= 1):
        raise ValueError(f"neighborhood fraction must be in (0, 1], got {lam}")
    cs, lc = c_star, lam * c_star
    r = r_sigma
    pi = {1: (cs + 1.0) * r, 0: 1.5 / (cs**2 - 0.25)}
    grad = {
        2: 4.0 * cs * r,
        1: 8.0 / lc + (8.0 * (lc + 1.0) ** 2 + 1.0) / (cs**2 - 0.25),
    }
    lap_second = (
        8.0
        + 24.0 * (lc + 1.0) ** 2
        + (56.0 * cs**3 - 7.0) / (3.0 * (cs**4 - 1.0 / 16.0))
        + cs * (64.0 * cs**3 - 8.0) / (cs**2 + 0.25)
        + (16.0 * cs**3 - 2.0) / lc
    )
    laplace = {3: 24.0 * cs * r, 1: lap_second / (3.0 * r * (cs**4 - 1.0 / 16.0))}
    box_second = (
        12.0 / (2.0 * cs + 1.0) + 16.0 + 24.0 * lc + (24.0 * cs - 12.0) / lc
    )
    box = {3: 24.0 * cs * r, 1: box_second / (r * (cs**2 - 0.25))}
    return {"pi": pi, "grad": grad, "laplace": laplace, "box": box}


def scenario_parameters(scenario: str, m: int | None = None) -> dict[str, float]:
    """The two worked parameter regimes: 'fine' is the one-parameter family
    of vanishing cell radius with growing radius multiple, 'coarse' the fixed
    desk-scale point."""
    if scenario == "fine":
        if m is None or m < 1:
            raise ValueError("the fine regime needs a positive integer m")
        return {
            "r_sigma": 10.0 ** (-5 * m),
            "c_star": 10.0 ** (4 * m),
            "lam": 10.0 ** (-2 * m),
        }
    if scenario == "coarse":
        return {"r_sigma": 1e-2, "c_star": 4.0, "lam": 0.5}
    raise ValueError(f"unknown scenario {scenario!r}; use 'fine' or 'coarse'")


def simplified_budgets(scenario: str, m: int | None = None) -> dict[str, dict[int, float]]:
    """Rounded-up budget coefficients quoted for the two regimes. They must
    dominate ``reference_budgets`` at the matching parameters."""
    if scenario == "fine":
        if m is None or m < 1:
            raise ValueError("the fine regime needs a positive integer m")
        return {
            "pi": {1: 10.0**-m + 10.0 ** (-5 * m), 0: 10.0 ** (-(8 * m - 1))},
            "grad": {2: 4.0 * 10.0**-m, 1: 10.0 ** (-(2 * m - 1))},
            "laplace": {3: 24.0 * 10.0**-m, 1: 10.0 ** (-(m - 1))},
            "box": {3: 24.0 * 10.0**-m, 1: 5.0 * 10.0 ** (-(m - 1))},
        }
    if scenario == "coarse":
        return {
            "pi": {1: 1.0 / 20.0, 0: 1.0 / 10.0},
            "grad": {2: 4.0 / 25.0, 1: 10.0},
            "laplace": {3: 24.0 / 25.0, 1: 300.0},
            "box": {3: 24.0 / 25.0, 1: 700.0},
        }
    raise ValueError(f"unknown scenario {scenario!r}; use 'fine' or 'coarse'")


# ---------------------------------------------------------------------------
# small exact facts the estimates lean on


def multiindex_reciprocal_factorial_sum(order: int) -> float:
    """Sum of 1/alpha! over two-index multi-indices of the given order.

    Equals 2^order / order!; never exceeds 2, with equality at orders 1 and 2.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    return sum(
        1.0 / (math.factorial(i) * math.factorial(order - i)) for i in range(order + 1)
    )


def taylor_remainder_limit(order: int, dist: float, seminorm: float) -> float:
    """Ceiling on |f(y) - T_order(y)| in terms of |y - x| and the next
    derivative bound: 2 (order+1) |y-x|^(order+1) |f|_(order+1)."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    return 2.0 * (order + 1) * dist ** (order + 1) * seminorm
