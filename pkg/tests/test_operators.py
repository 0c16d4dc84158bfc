"""Discrete operators, the integral stages, and the chain evaluation."""

import numpy as np
import pytest

from voromps.errors import DegenerateConfigurationError, QuadratureError
from voromps.functions import ScalarField, field_catalog, grid_seminorm, make_field
from voromps.geometry import Annulus, DomainSpec, build_voronoi, cell_annulus_area
from voromps.operators import (
    CHAIN_LINKS,
    CHAIN_STAGES,
    OPERATOR_KINDS,
    OperatorResult,
    apriori_limit,
    cell_stage_operator,
    continuous_operator,
    discrete_operator,
    evaluate_chain,
    grad_tilde,
    laplace_tilde,
    make_context,
    pi_tilde,
    stage_gaps,
    _check_agreement,
)
from voromps.weights import (
    custom_radial_weight,
    indicator_weight,
    linear_taper_weight,
    radial_moment,
)


def quadratic_at(center, domain):
    """|x - p|^2 with p chosen by the test, exact derivatives throughout."""
    p = np.asarray(center, dtype=float)

    def fn(x):
        d = x - p
        return np.sum(d * d, axis=1)

    def grad_fn(x):
        return 2.0 * (x - p)

    def lap_fn(x):
        return np.full(len(x), 4.0)

    def deriv_fn(alpha, x):
        if alpha == (0, 0):
            return fn(x)
        if alpha == (1, 0):
            return 2.0 * (x[:, 0] - p[0])
        if alpha == (0, 1):
            return 2.0 * (x[:, 1] - p[1])
        if alpha in ((2, 0), (0, 2)):
            return np.full(len(x), 2.0)
        return np.zeros(len(x))

    corners = np.array(
        [
            [domain.omega_h_min[0], domain.omega_h_min[1]],
            [domain.omega_h_min[0], domain.omega_h_max[1]],
            [domain.omega_h_max[0], domain.omega_h_min[1]],
            [domain.omega_h_max[0], domain.omega_h_max[1]],
        ]
    )
    reach = float(np.max(np.hypot(*(corners - p).T)))
    return ScalarField(
        name="quad_at",
        fn=fn,
        grad_fn=grad_fn,
        lap_fn=lap_fn,
        deriv_fn=deriv_fn,
        seminorms=(reach**2, 2.0 * reach, 2.0, 0.0),
    )


# ---------------------------------------------------------------------------
# hand oracle: quarter cells, indicator weight covering the whole square


@pytest.fixture(scope="module")
def quadrant_ctx(quadrant_decomp):
    # h reaches past the far corner, delta stays inside the focal cell, so
    # every non-focal quarter cell contributes its full area of 1/4
    return make_context(quadrant_decomp, 0, indicator_weight(0.05, 1.2))


def test_quadrant_moments_by_hand(quadrant_ctx):
    assert quadrant_ctx.s0 == pytest.approx(0.75, rel=1e-13)
    assert quadrant_ctx.s1 == pytest.approx(0.25 * (1.0 + np.sqrt(0.5)), rel=1e-13)
    assert quadrant_ctx.s2 == pytest.approx(0.25, rel=1e-13)
    assert np.allclose(quadrant_ctx.volumes, 0.25, rtol=1e-13)


def test_quadrant_pi_by_hand(quadrant_decomp, quadrant_ctx):
    f = make_field("coord_x1", quadrant_decomp.domain)
    assert pi_tilde(quadrant_ctx, f).value == pytest.approx(7.0 / 12.0, rel=1e-12)


def test_quadrant_grad_by_hand(quadrant_decomp, quadrant_ctx):
    f = make_field("coord_x1", quadrant_decomp.domain)
    g = grad_tilde(quadrant_ctx, f).value
    assert g == pytest.approx([1.0, 1.0 / 3.0], rel=1e-12)


def test_quadrant_laplace_and_box_by_hand(quadrant_decomp, quadrant_ctx):
    f = make_field("coord_x1", quadrant_decomp.domain)
    assert laplace_tilde(quadrant_ctx, f).value == pytest.approx(4.0, rel=1e-12)
    assert discrete_operator(quadrant_ctx, f, "box").value == pytest.approx(
        4.0, rel=1e-12
    )


# ---------------------------------------------------------------------------
# loop oracle on an irregular cloud


def test_discrete_matches_plain_loop(random_decomp):
    dec = random_decomp
    w = linear_taper_weight(0.03, 0.22)
    k = dec.nearest_site(dec.domain.center)
    ctx = make_context(dec, k, w)
    f = make_field("sincos", dec.domain)

    ak = dec.sites[k]
    fk = f(ak)
    s0 = s1 = s2 = 0.0
    pi_num = 0.0
    grad_num = np.zeros(2)
    lap_num = 0.0
    box_num = 0.0
    ann = Annulus(ak, w.delta, w.h)
    for i in range(dec.n_sites):
        if i == k:
            continue
        d = float(np.hypot(*(dec.sites[i] - ak)))
        if d >= w.h:
            continue
        vw = cell_annulus_area(dec.cells[i], ann) * w.value(d)
        fi = f(dec.sites[i])
        s0 += vw
        s1 += vw * d
        s2 += vw * d * d
        pi_num += vw * fi
        grad_num += vw * (fk - fi) / d**2 * (ak - dec.sites[i])
        lap_num += vw * (fk - fi)
        box_num += vw * (fk - fi) / d**2

    assert ctx.s0 == pytest.approx(s0, rel=1e-12)
    assert ctx.s1 == pytest.approx(s1, rel=1e-12)
    assert ctx.s2 == pytest.approx(s2, rel=1e-12)
    assert pi_tilde(ctx, f).value == pytest.approx(pi_num / s0, rel=1e-10)
    assert grad_tilde(ctx, f).value == pytest.approx(2.0 * grad_num / s0, rel=1e-10)
    assert laplace_tilde(ctx, f).value == pytest.approx(-4.0 * lap_num / s2, rel=1e-10)
    assert discrete_operator(ctx, f, "box").value == pytest.approx(
        -4.0 * box_num / s0, rel=1e-10
    )


def test_discrete_operators_are_linear(random_decomp):
    dec = random_decomp
    ctx = make_context(dec, dec.nearest_site(dec.domain.center), linear_taper_weight(0.03, 0.22))
    f = make_field("coord_x1", dec.domain)
    g = make_field("sincos", dec.domain)
    combo = ScalarField(
        name="combo",
        fn=lambda x: 2.0 * f.fn(x) - 3.0 * g.fn(x),
        grad_fn=lambda x: 2.0 * f.grad_fn(x) - 3.0 * g.grad_fn(x),
        lap_fn=lambda x: 2.0 * f.lap_fn(x) - 3.0 * g.lap_fn(x),
        deriv_fn=lambda a, x: 2.0 * f.deriv_fn(a, x) - 3.0 * g.deriv_fn(a, x),
        seminorms=tuple(2 * a + 3 * b for a, b in zip(f.seminorms, g.seminorms)),
    )
    for kind in OPERATOR_KINDS:
        lhs = np.asarray(discrete_operator(ctx, combo, kind).value)
        rhs = 2.0 * np.asarray(discrete_operator(ctx, f, kind).value) - 3.0 * np.asarray(
            discrete_operator(ctx, g, kind).value
        )
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-13)


def test_constants_are_reproduced_and_annihilated(random_decomp):
    dec = random_decomp
    ctx = make_context(dec, dec.nearest_site(dec.domain.center), linear_taper_weight(0.03, 0.22))
    f = make_field("const", dec.domain)
    assert pi_tilde(ctx, f).value == 1.0
    assert np.all(grad_tilde(ctx, f).value == 0.0)
    assert laplace_tilde(ctx, f).value == 0.0
    assert discrete_operator(ctx, f, "box").value == 0.0


def test_centered_quadratic_identities(random_decomp):
    # with the field centered on the focal site the sums collapse to the
    # radial moments, independent of any point arrangement
    dec = random_decomp
    k = dec.nearest_site(dec.domain.center)
    ctx = make_context(dec, k, linear_taper_weight(0.03, 0.22))
    f = quadratic_at(dec.sites[k], dec.domain)
    assert pi_tilde(ctx, f).value == pytest.approx(ctx.s2 / ctx.s0, rel=1e-12)
    assert laplace_tilde(ctx, f).value == pytest.approx(4.0, rel=1e-12)
    assert discrete_operator(ctx, f, "box").value == pytest.approx(4.0, rel=1e-12)


def test_unknown_kind_rejected(random_decomp):
    dec = random_decomp
    ctx = make_context(dec, dec.nearest_site(dec.domain.center), linear_taper_weight(0.03, 0.22))
    f = make_field("const", dec.domain)
    with pytest.raises(ValueError, match="unknown operator kind"):
        discrete_operator(ctx, f, "curl")
    with pytest.raises(ValueError, match="unknown operator kind"):
        apriori_limit(ctx, "curl", 1.0)
    with pytest.raises(ValueError, match="stage must be"):
        cell_stage_operator(ctx, f, "pi", "tilde")


# ---------------------------------------------------------------------------
# continuous stage closed forms


@pytest.fixture(scope="module")
def moat_ctx(moat_decomp):
    k = moat_decomp.nearest_site([0.0, 0.0])
    return make_context(moat_decomp, k, indicator_weight(0.45, 10.5), lam=0.5)


def test_continuous_linear_field_closed_forms(moat_ctx, moat_decomp):
    f = make_field("coord_x1", moat_decomp.domain)
    x1 = moat_ctx.site[0]
    assert continuous_operator(moat_ctx, f, "pi").value == pytest.approx(x1, abs=1e-12)
    g = continuous_operator(moat_ctx, f, "grad").value
    assert g == pytest.approx([1.0, 0.0], abs=1e-12)
    assert abs(continuous_operator(moat_ctx, f, "laplace").value) < 1e-12
    assert abs(continuous_operator(moat_ctx, f, "box").value) < 1e-12


def test_continuous_centered_quadratic_closed_forms(moat_ctx, moat_decomp):
    f = quadratic_at(moat_ctx.site, moat_decomp.domain)
    w = moat_ctx.weight
    second = radial_moment(w, 2) / radial_moment(w, 0)
    # indicator annulus: second moment ratio has a two-line closed form
    assert second == pytest.approx((w.h**2 + w.delta**2) / 2.0, rel=1e-13)
    assert continuous_operator(moat_ctx, f, "pi").value == pytest.approx(
        second, rel=1e-10
    )
    assert continuous_operator(moat_ctx, f, "laplace").value == pytest.approx(
        4.0, rel=1e-10
    )
    assert continuous_operator(moat_ctx, f, "box").value == pytest.approx(
        4.0, rel=1e-10
    )
    assert np.hypot(*continuous_operator(moat_ctx, f, "grad").value) < 1e-10


# ---------------------------------------------------------------------------
# cell-sum stages


def test_hat_stage_against_monte_carlo(random_decomp):
    dec = random_decomp
    w = linear_taper_weight(0.03, 0.22)
    k = dec.nearest_site(dec.domain.center)
    ctx = make_context(dec, k, w)
    f = make_field("sincos", dec.domain)
    res = cell_stage_operator(ctx, f, "pi", "hat")

    rng = np.random.Generator(np.random.Philox(key=7))
    n = 400_000
    ak = dec.sites[k]
    pts = rng.uniform(ak - w.h, ak + w.h, size=(n, 2))
    box_area = (2.0 * w.h) ** 2
    r = np.hypot(pts[:, 0] - ak[0], pts[:, 1] - ak[1])
    owner = np.empty(n, dtype=int)
    for lo in range(0, n, 65536):
        hi = min(lo + 65536, n)
        d2 = ((pts[lo:hi, None, :] - dec.sites[None, :, :]) ** 2).sum(axis=2)
        owner[lo:hi] = np.argmin(d2, axis=1)
    in_sum = np.isin(owner, ctx.neighbors) & (r >= w.delta) & (r <= w.h)

    wv = np.where(in_sum, w.value(r), 0.0)
    num_samples = wv * np.where(in_sum, f.fn(pts), 0.0)
    for samples, target in ((num_samples, res.value * res.denominator), (wv, res.denominator)):
        est = samples.mean() * box_area
        se = samples.std(ddof=1) / np.sqrt(n) * box_area
        assert abs(est - target) < 3.5 * se


def test_indicator_breve_collapses_to_discrete(lattice_decomp):
    # with a flat weight the cell-integrated weight equals the cell volume,
    # so every breve form except the second-difference one is the discrete sum
    dec = lattice_decomp
    ctx = make_context(dec, dec.nearest_site([0.0, 0.0]), indicator_weight(0.35, 3.2))
    f = make_field("sincos", dec.domain)
    chain = evaluate_chain(ctx, f)
    for kind in ("pi", "grad", "box"):
        breve = np.asarray(chain.value(kind, "breve"))
        tilde = np.asarray(chain.value(kind, "tilde"))
        scale = max(1.0, float(np.max(np.abs(tilde))))
        assert np.max(np.abs(breve - tilde)) < 1e-8 * scale
    lap_breve = chain.value("laplace", "breve")
    lap_tilde = chain.value("laplace", "tilde")
    assert abs(lap_breve - lap_tilde) > 1e-4 * abs(lap_tilde)


def test_chain_structure_and_references(moat_ctx, moat_decomp):
    f = quadratic_at(moat_ctx.site, moat_decomp.domain)
    chain = evaluate_chain(moat_ctx, f)
    assert len(chain.results) == 16
    for kind in OPERATOR_KINDS:
        for stage in CHAIN_STAGES:
            res = chain.results[(kind, stage)]
            assert isinstance(res, OperatorResult)
            assert res.kind == kind and res.stage == stage
            assert np.all(np.isfinite(res.value))
            assert res.denominator > 0
    assert chain.reference("pi") == pytest.approx(0.0, abs=1e-12)
    assert chain.reference("laplace") == 4.0
    assert np.all(chain.reference("grad") == 0.0)


def test_check_agreement_raises_on_disagreement():
    base = {"pi": OperatorResult("pi", "hat", 1.0, 1.0)}
    fine = {"pi": OperatorResult("pi", "hat", 1.01, 1.0)}
    with pytest.raises(QuadratureError, match="order doubling"):
        _check_agreement(base, fine, "cell stage")


# ---------------------------------------------------------------------------
# degenerate configurations


def test_no_neighbors_raises():
    dom = DomainSpec([0.2, 0.2], [0.8, 0.8], 0.2)
    dec = build_voronoi([[0.25, 0.5], [0.75, 0.5]], dom)
    with pytest.raises(DegenerateConfigurationError):
        make_context(dec, 0, indicator_weight(0.01, 0.1))


def test_zero_weight_raises(random_decomp):
    dec = random_decomp
    dead = custom_radial_weight(
        0.03, 0.22, table=([0.03, 0.22], [0.0, 0.0]), name="dead"
    )
    with pytest.raises(DegenerateConfigurationError):
        make_context(dec, dec.nearest_site(dec.domain.center), dead)


# ---------------------------------------------------------------------------
# scale-explicit ceilings and budget bookkeeping


def test_apriori_limit_values(moat_ctx):
    d = moat_ctx.delta
    assert apriori_limit(moat_ctx, "pi", 2.0) == 2.0
    assert apriori_limit(moat_ctx, "grad", 2.0) == pytest.approx(8.0 / d)
    assert apriori_limit(moat_ctx, "laplace", 2.0) == pytest.approx(16.0 / d**2)
    assert apriori_limit(moat_ctx, "box", 2.0) == pytest.approx(16.0 / d**2)


def test_all_stages_respect_apriori_limits(moat_ctx, moat_decomp):
    fields = field_catalog(moat_decomp.domain)
    for f in fields.values():
        sup = grid_seminorm(f, moat_decomp.domain, 0)
        chain = evaluate_chain(moat_ctx, f)
        for kind in OPERATOR_KINDS:
            lim = apriori_limit(moat_ctx, kind, sup)
            for stage in CHAIN_STAGES:
                v = np.asarray(chain.value(kind, stage), dtype=float)
                mag = float(np.sqrt(np.sum(v * v))) if v.ndim else abs(float(v))
                assert mag <= lim * (1.0 + 1e-9), (f.name, kind, stage)


def test_stage_gaps_cover_every_link_and_telescope(moat_ctx, moat_decomp):
    f = make_field("gaussian", moat_decomp.domain)
    chain = evaluate_chain(moat_ctx, f)
    gaps = stage_gaps(moat_ctx, f, chain=chain)
    assert len(gaps) == 16
    seen = {(g.kind, g.link) for g in gaps}
    assert seen == {(k, l) for k in OPERATOR_KINDS for l in CHAIN_LINKS}
    for g in gaps:
        assert g.rhs >= 0.0
        assert g.passed, (g.kind, g.link, g.lhs, g.rhs)
        assert g.margin == g.rhs - g.lhs
    # triangle inequality: the four link gaps must cover the end-to-end error
    for kind in OPERATOR_KINDS:
        end = np.asarray(chain.reference(kind), dtype=float) - np.asarray(
            chain.value(kind, "tilde"), dtype=float
        )
        total = sum(g.lhs for g in gaps if g.kind == kind)
        assert float(np.sqrt(np.sum(end * end))) <= total + 1e-12
