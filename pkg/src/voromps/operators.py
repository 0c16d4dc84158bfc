"""Discrete particle operators and the chain of intermediates behind them.

Four operators approximate a field and its derivatives at a focal site from
cell-area-weighted neighbor values: an average, a gradient, and two
Laplacian forms (one normalizing by the second distance moment, one dividing
each term by the squared distance). Each has three stage-mates used by the
error analysis:

  continuous  annulus integrals of the field against the weight,
  hat         the same integrals summed cell by cell over the neighbors,
  breve       cell sums with the field (and, where the analysis freezes
              them, the distances and weight) evaluated at the sites,
  tilde       the fully discrete operator.

The difference between consecutive stages is what the bound constants
control; ``stage_gaps`` measures each link and pairs it with its budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bounds as _bounds
from .errors import DegenerateConfigurationError, GeometryError, QuadratureError
from .functions import ScalarField
from .geometry import Annulus, VoronoiDecomposition, cell_annulus_area, neighbor_sets
from .quadrature import RegionNodes, annulus_nodes_banded, region_nodes_banded
from .weights import WeightFunction, radial_moment

FloatArray = np.ndarray

OPERATOR_KINDS = ("pi", "grad", "laplace", "box")
CHAIN_STAGES = ("continuous", "hat", "breve", "tilde")
CHAIN_LINKS = (
    "exact_to_continuous",
    "continuous_to_hat",
    "hat_to_breve",
    "breve_to_tilde",
)

# (n_theta, n_r) pairs: base estimate and the doubled check
_CELL_ORDERS = ((10, 8), (20, 16))
_ANNULUS_ORDERS = ((64, 24), (128, 48))

_DENOMINATOR_FLOOR = 1e-3


@dataclass(frozen=True)
class OperatorResult:
    kind: str
    stage: str
    value: float | FloatArray
    denominator: float


@dataclass(frozen=True)
class ExactValues:
    value: float
    gradient: FloatArray
    laplacian: float


class _CellNodeSet:
    """Concatenated quadrature nodes over all neighbor cells at one order."""

    __slots__ = ("points", "radii", "w_eff", "owner", "e_w", "d_w", "d_w2")

    def __init__(self, ctx: "NeighborContext", n_theta: int, n_r: int):
        bands = ctx.weight.radial_bands()
        parts: list[RegionNodes] = []
        owners: list[FloatArray] = []
        for slot, i in enumerate(ctx.neighbors):
            nodes = region_nodes_banded(ctx.decomp.cells[i], ctx.site, bands, n_theta, n_r)
            parts.append(nodes)
            owners.append(np.full(nodes.n, slot, dtype=np.intp))
        self.points = np.concatenate([p.points for p in parts], axis=0)
        self.radii = np.concatenate([p.radii for p in parts])
        quad_w = np.concatenate([p.weights for p in parts])
        self.owner = np.concatenate(owners)
        self.w_eff = quad_w * ctx.weight.value(self.radii)
        self.e_w = np.bincount(self.owner, weights=self.w_eff, minlength=len(ctx.neighbors))
        self.d_w = float(self.w_eff.sum())
        self.d_w2 = float(self.w_eff @ self.radii**2)


@dataclass
class NeighborContext:
    """Everything the operators need around one focal site.

    Geometric quantities (neighbor distances, clipped cell areas, cell and
    annulus quadrature nodes) are computed once and shared by every field
    evaluated in this context. The weight owns the support radii, so the
    context reads delta and h from it.
    """

    decomp: VoronoiDecomposition
    k: int
    weight: WeightFunction
    lam: float | None = None

    site: FloatArray = field(init=False, repr=False)
    h: float = field(init=False)
    delta: float = field(init=False)
    neighbors: list[int] = field(init=False, repr=False)
    neighbors_with_focal: list[int] = field(init=False, repr=False)
    lam_neighbors: list[int] | None = field(init=False, repr=False, default=None)
    dists: FloatArray = field(init=False, repr=False)
    volumes: FloatArray = field(init=False, repr=False)
    w_at_sites: FloatArray = field(init=False, repr=False)
    s0: float = field(init=False)
    s1: float = field(init=False)
    s2: float = field(init=False)
    lam_inv_sum: float = field(init=False, default=0.0)

    _cells: dict = field(init=False, repr=False, default_factory=dict)
    _annuli: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if not (0 <= self.k < self.decomp.n_sites):
            raise GeometryError(f"focal index {self.k} out of range")
        if self.lam is not None and not (0 < self.lam <= 1):
            raise GeometryError(f"lambda must be in (0, 1], got {self.lam}")
        self.site = self.decomp.sites[self.k]
        self.h = self.weight.h
        self.delta = self.weight.delta
        rbar, r = neighbor_sets(self.decomp, self.site, self.h, focal=self.k)
        self.neighbors_with_focal = rbar
        self.neighbors = r
        if not r:
            raise DegenerateConfigurationError(
                f"no neighbors within h={self.h:.6g} of site {self.k}"
            )
        sites = self.decomp.sites[r]
        d = sites - self.site
        self.dists = np.hypot(d[:, 0], d[:, 1])
        ann = Annulus(self.site, self.delta, self.h)
        self.volumes = np.array(
            [cell_annulus_area(self.decomp.cells[i], ann) for i in r]
        )
        self.w_at_sites = self.weight.value(self.dists)
        vw = self.volumes * self.w_at_sites
        self.s0 = float(vw.sum())
        self.s1 = float(vw @ self.dists)
        self.s2 = float(vw @ self.dists**2)
        if not (self.s0 > 0):
            raise DegenerateConfigurationError(
                f"discrete averaging denominator is {self.s0:.6g}; "
                "no neighbor carries weight"
            )
        if self.lam is not None:
            _, r_lam = neighbor_sets(self.decomp, self.site, self.lam * self.h, focal=self.k)
            self.lam_neighbors = r_lam
            if r_lam:
                pos = {idx: slot for slot, idx in enumerate(r)}
                slots = np.array([pos[i] for i in r_lam], dtype=np.intp)
                self.lam_inv_sum = float(
                    np.sum(self.volumes[slots] * self.w_at_sites[slots] / self.dists[slots])
                )

    @property
    def r_sigma(self) -> float:
        return self.decomp.r_sigma

    def cell_nodes(self, level: int) -> _CellNodeSet:
        if level not in self._cells:
            nt, nr = _CELL_ORDERS[level]
            self._cells[level] = _CellNodeSet(self, nt, nr)
        return self._cells[level]

    def annulus_nodes(self, level: int) -> RegionNodes:
        if level not in self._annuli:
            nt, nr = _ANNULUS_ORDERS[level]
            self._annuli[level] = annulus_nodes_banded(
                self.site, self.weight.radial_bands(), nt, nr
            )
        return self._annuli[level]


def make_context(
    decomp: VoronoiDecomposition,
    k: int,
    weight: WeightFunction,
    lam: float | None = None,
) -> NeighborContext:
    return NeighborContext(decomp=decomp, k=k, weight=weight, lam=lam)


# ---------------------------------------------------------------------------
# fully discrete operators


def _discrete(ctx: NeighborContext, f: ScalarField) -> dict[str, OperatorResult]:
    fk = f(ctx.site)
    fi = f(ctx.decomp.sites[ctx.neighbors])
    vw = ctx.volumes * ctx.w_at_sites
    diff = fk - fi
    disp = ctx.site[None, :] - ctx.decomp.sites[ctx.neighbors]
    floor2 = _DENOMINATOR_FLOOR * ctx.s0 * ctx.delta**2
    if ctx.s2 < floor2:
        raise DegenerateConfigurationError(
            f"second-moment denominator {ctx.s2:.3e} below floor {floor2:.3e}"
        )
    pi = float(vw @ fi) / ctx.s0
    grad = 2.0 * (vw * diff / ctx.dists**2) @ disp / ctx.s0
    lap = -4.0 * float(vw @ diff) / ctx.s2
    box = -4.0 * float(vw @ (diff / ctx.dists**2)) / ctx.s0
    return {
        "pi": OperatorResult("pi", "tilde", pi, ctx.s0),
        "grad": OperatorResult("grad", "tilde", grad, ctx.s0),
        "laplace": OperatorResult("laplace", "tilde", lap, ctx.s2),
        "box": OperatorResult("box", "tilde", box, ctx.s0),
    }


def pi_tilde(ctx, f) -> OperatorResult:
    return _discrete(ctx, f)["pi"]


def grad_tilde(ctx, f) -> OperatorResult:
    return _discrete(ctx, f)["grad"]


def laplace_tilde(ctx, f) -> OperatorResult:
    return _discrete(ctx, f)["laplace"]


def box_tilde(ctx, f) -> OperatorResult:
    return _discrete(ctx, f)["box"]


def discrete_operator(ctx, f, kind: str) -> OperatorResult:
    try:
        return _discrete(ctx, f)[kind]
    except KeyError:
        raise ValueError(f"unknown operator kind {kind!r}") from None


# ---------------------------------------------------------------------------
# integral stages


def _continuous_at(ctx, f, level: int) -> dict[str, OperatorResult]:
    nodes = ctx.annulus_nodes(level)
    weff = nodes.weights * ctx.weight.value(nodes.radii)
    fk = f(ctx.site)
    fv = f(nodes.points)
    m0 = radial_moment(ctx.weight, 0)
    m2 = radial_moment(ctx.weight, 2)
    if m0 <= 0 or m2 <= 0:
        raise DegenerateConfigurationError("weight has zero mass on its support")
    diff = fk - fv
    disp = ctx.site[None, :] - nodes.points
    r2 = nodes.radii**2
    pi = float(weff @ fv) / m0
    grad = 2.0 * ((weff * diff / r2) @ disp) / m0
    lap = -4.0 * float(weff @ diff) / m2
    box = -4.0 * float(weff @ (diff / r2)) / m0
    return {
        "pi": OperatorResult("pi", "continuous", pi, m0),
        "grad": OperatorResult("grad", "continuous", grad, m0),
        "laplace": OperatorResult("laplace", "continuous", lap, m2),
        "box": OperatorResult("box", "continuous", box, m0),
    }


def _cell_stage_at(ctx, f, level: int) -> dict[str, OperatorResult]:
    cn = ctx.cell_nodes(level)
    d_w, d_w2 = cn.d_w, cn.d_w2
    floor = _DENOMINATOR_FLOOR * ctx.s0
    if d_w < floor or d_w2 < floor * ctx.delta**2:
        raise DegenerateConfigurationError(
            f"cell-sum denominators {d_w:.3e}, {d_w2:.3e} below floor"
        )
    fk = f(ctx.site)
    fv = f(cn.points)
    diff = fk - fv
    disp = ctx.site[None, :] - cn.points
    r2 = cn.radii**2

    pi_hat = float(cn.w_eff @ fv) / d_w
    grad_hat = 2.0 * ((cn.w_eff * diff / r2) @ disp) / d_w
    lap_hat = -4.0 * float(cn.w_eff @ diff) / d_w2
    box_hat = -4.0 * float(cn.w_eff @ (diff / r2)) / d_w

    fi = f(ctx.decomp.sites[ctx.neighbors])
    site_diff = f(ctx.site) - fi
    site_disp = ctx.site[None, :] - ctx.decomp.sites[ctx.neighbors]
    d2 = ctx.dists**2
    vw = ctx.volumes * ctx.w_at_sites
    # the average keeps its discrete numerator; the derivative forms freeze
    # the field factors at the sites but keep the cell-integrated weight
    pi_breve = float(vw @ fi) / d_w
    grad_breve = 2.0 * ((cn.e_w * site_diff / d2) @ site_disp) / d_w
    lap_breve = -4.0 * float(cn.e_w @ site_diff) / d_w2
    box_breve = -4.0 * float(cn.e_w @ (site_diff / d2)) / d_w

    return {
        ("pi", "hat"): OperatorResult("pi", "hat", pi_hat, d_w),
        ("grad", "hat"): OperatorResult("grad", "hat", grad_hat, d_w),
        ("laplace", "hat"): OperatorResult("laplace", "hat", lap_hat, d_w2),
        ("box", "hat"): OperatorResult("box", "hat", box_hat, d_w),
        ("pi", "breve"): OperatorResult("pi", "breve", pi_breve, d_w),
        ("grad", "breve"): OperatorResult("grad", "breve", grad_breve, d_w),
        ("laplace", "breve"): OperatorResult("laplace", "breve", lap_breve, d_w2),
        ("box", "breve"): OperatorResult("box", "breve", box_breve, d_w),
    }


def _check_agreement(base, fine, what: str):
    for key, res in fine.items():
        b = base[key].value
        diff = float(np.max(np.abs(np.asarray(res.value) - np.asarray(b))))
        scale = float(np.max(np.abs(np.asarray(res.value))))
        if diff > max(1e-9, 1e-8 * scale):
            raise QuadratureError(
                f"{what} {key} changed by {diff:.3e} under order doubling; "
                "integrand too rough for the configured quadrature"
            )


def continuous_operator(ctx, f, kind: str) -> OperatorResult:
    base = _continuous_at(ctx, f, 0)
    fine = _continuous_at(ctx, f, 1)
    _check_agreement(base, fine, "annulus stage")
    return fine[kind]


def cell_stage_operator(ctx, f, kind: str, stage: str) -> OperatorResult:
    if stage not in ("hat", "breve"):
        raise ValueError(f"stage must be 'hat' or 'breve', got {stage!r}")
    base = _cell_stage_at(ctx, f, 0)
    fine = _cell_stage_at(ctx, f, 1)
    _check_agreement(base, fine, "cell stage")
    return fine[(kind, stage)]


@dataclass(frozen=True)
class ChainEvaluation:
    exact: ExactValues
    results: dict

    def value(self, kind: str, stage: str):
        return self.results[(kind, stage)].value

    def reference(self, kind: str):
        if kind == "pi":
            return self.exact.value
        if kind == "grad":
            return self.exact.gradient
        return self.exact.laplacian


def evaluate_chain(ctx: NeighborContext, f: ScalarField) -> ChainEvaluation:
    """All sixteen stage values for one field, with quadrature order-doubling
    cross-checks on every integral stage."""
    results: dict = {}

    cont_base = _continuous_at(ctx, f, 0)
    cont_fine = _continuous_at(ctx, f, 1)
    _check_agreement(cont_base, cont_fine, "annulus stage")
    for kind, res in cont_fine.items():
        results[(kind, "continuous")] = res

    cell_base = _cell_stage_at(ctx, f, 0)
    cell_fine = _cell_stage_at(ctx, f, 1)
    _check_agreement(cell_base, cell_fine, "cell stage")
    results.update(cell_fine)

    results.update({(k, "tilde"): r for k, r in _discrete(ctx, f).items()})

    exact = ExactValues(
        value=f(ctx.site), gradient=f.gradient(ctx.site), laplacian=f.laplacian(ctx.site)
    )
    return ChainEvaluation(exact=exact, results=results)


# ---------------------------------------------------------------------------
# measured stage gaps against their budgets


@dataclass(frozen=True)
class GapReport:
    kind: str
    link: str
    lhs: float
    rhs: float
    #: absolute allowance for floating-point noise in the lhs, sized from
    #: the stage values themselves; matters only when the budget is 0
    #: (indicator weight kills every Lipschitz term, constants kill s3).
    noise: float = 0.0

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-9) + self.noise

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _gap_norm(a, b) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum(d * d))) if d.ndim else float(abs(d))


def stage_gaps(
    ctx: NeighborContext,
    f: ScalarField,
    chain: ChainEvaluation | None = None,
    constants: "_bounds.ConstantsBundle | None" = None,
) -> list[GapReport]:
    """Measure every stage-to-stage distance and compare with its budget."""
    if chain is None:
        chain = evaluate_chain(ctx, f)
    if constants is None:
        constants = _bounds.compute_constants(ctx)
    seminorms = tuple(f.seminorm(j) for j in range(4))
    reports = []
    for kind in OPERATOR_KINDS:
        values = [chain.reference(kind)] + [
            chain.value(kind, stage) for stage in CHAIN_STAGES
        ]
        for link, a, b in zip(CHAIN_LINKS, values, values[1:]):
            rhs = _bounds.link_budget(kind, link, constants, seminorms)
            scale = max(1.0, _gap_norm(a, 0.0), _gap_norm(b, 0.0))
            reports.append(
                GapReport(
                    kind=kind,
                    link=link,
                    lhs=_gap_norm(a, b),
                    rhs=rhs,
                    noise=1e-12 * scale,
                )
            )
    return reports


def apriori_limit(ctx: NeighborContext, kind: str, sup_f: float) -> float:
    """Scale-explicit ceiling implied by positivity of the denominators."""
    if kind == "pi":
        return sup_f
    if kind == "grad":
        return 4.0 * sup_f / ctx.delta
    if kind in ("laplace", "box"):
        return 8.0 * sup_f / ctx.delta**2
    raise ValueError(f"unknown operator kind {kind!r}")
