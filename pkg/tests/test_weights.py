import math

import numpy as np
import pytest

from voromps.errors import WeightError
from voromps.geometry import ConvexPolygon
from voromps.oracle import mc_region_integral
from voromps.weights import (
    BallMinusBall,
    BallMinusCell,
    CellMinusBall,
    annular_l1_norm,
    annulus_tensor_moment,
    annulus_vector_moment,
    check_positivity,
    custom_radial_weight,
    indicator_weight,
    linear_taper_weight,
    radial_moment,
)


class TestProfiles:
    def test_indicator_values(self):
        w = indicator_weight(0.2, 1.0)
        assert w.value(0.5) == 1.0
        assert w.value(0.1) == 0.0
        assert w.value(1.0000001) == 0.0
        assert w.value(0.2) == 1.0  # closed support includes both edges
        np.testing.assert_allclose(w.value(np.array([0.1, 0.6, 2.0])), [0, 1, 0])

    def test_taper_values_and_lipschitz(self):
        w = linear_taper_weight(0.25, 1.0)
        assert w.value(0.25) == pytest.approx(1.0)
        assert w.value(1.0) == pytest.approx(0.0)
        assert w.value(0.625) == pytest.approx(0.5)
        assert w.lipschitz == pytest.approx(1.0 / 0.75)

    def test_rejects_bad_radii(self):
        with pytest.raises(WeightError):
            indicator_weight(0.5, 0.5)
        with pytest.raises(WeightError):
            indicator_weight(-0.1, 0.5)

    def test_custom_table_profile(self):
        w = custom_radial_weight(
            0.2, 1.0, table=([0.2, 0.5, 1.0], [1.0, 0.4, 0.0]), name="table"
        )
        assert w.value(0.35) == pytest.approx(0.7)
        assert w.breakpoints == (0.5,)
        # steepest segment has slope 2, estimate carries the 5% headroom
        assert w.lipschitz == pytest.approx(2.0 * 1.05, rel=1e-6)

    def test_custom_table_rejects_negative(self):
        with pytest.raises(WeightError, match="r=0.5"):
            custom_radial_weight(0.2, 1.0, table=([0.2, 0.5, 1.0], [1.0, -0.1, 0.0]))

    def test_custom_callable_profile(self):
        w = custom_radial_weight(0.2, 1.0, profile=lambda r: (1.0 - r) ** 2)
        assert w.value(0.4) == pytest.approx(0.36)
        # |d/dr (1-r)^2| = 2(1-r) <= 1.6 on [0.2, 1]
        assert 1.6 <= w.lipschitz <= 1.7

    def test_custom_rejects_both_or_neither(self):
        with pytest.raises(WeightError):
            custom_radial_weight(0.2, 1.0)
        with pytest.raises(WeightError):
            custom_radial_weight(
                0.2, 1.0, profile=lambda r: r, table=([0.2, 1.0], [1, 1])
            )


class TestRadialIntegral:
    def test_indicator_closed_forms(self):
        w = indicator_weight(0.3, 1.2)
        # plain area moment: ∫ r dr
        assert w.radial_integral(0.3, 1.2, 0) == pytest.approx(
            (1.2**2 - 0.3**2) / 2, rel=1e-15
        )
        # |z| moment
        assert w.radial_integral(0.3, 1.2, 1) == pytest.approx(
            (1.2**3 - 0.3**3) / 3, rel=1e-15
        )
        # 1/|z|^2 moment hits the log case
        assert w.radial_integral(0.3, 1.2, -2) == pytest.approx(
            math.log(1.2 / 0.3), rel=1e-15
        )

    def test_clipping_to_support(self):
        w = indicator_weight(0.3, 1.2)
        assert w.radial_integral(0.0, 99.0, 0) == w.radial_integral(0.3, 1.2, 0)
        assert w.radial_integral(1.3, 2.0, 0) == 0.0

    def test_taper_against_quadrature(self):
        w = linear_taper_weight(0.3, 1.2)
        generic = custom_radial_weight(
            0.3, 1.2, profile=lambda r: (1.2 - r) / 0.9, lipschitz=1 / 0.9
        )
        for n in (-2, -1, 0, 1, 2):
            assert w.radial_integral(0.3, 1.2, n) == pytest.approx(
                generic.radial_integral(0.3, 1.2, n), rel=1e-11
            )

    def test_ball_norms_match_area_formulas(self):
        w = indicator_weight(0.25, 1.0)
        assert annular_l1_norm(w, BallMinusBall(1.0, 0.25), 0) == pytest.approx(
            math.pi * (1.0 - 0.25**2), rel=1e-14
        )
        assert annular_l1_norm(w, BallMinusBall(1.0, 0.25), -1) == pytest.approx(
            2 * math.pi * 0.75, rel=1e-14
        )
        assert annular_l1_norm(w, BallMinusBall(1.0, 0.25), 1) == pytest.approx(
            2 * math.pi / 3 * (1.0 - 0.25**3), rel=1e-14
        )
        assert annular_l1_norm(w, BallMinusBall(1.0, 0.25), 2) == pytest.approx(
            math.pi / 2 * (1.0 - 0.25**4), rel=1e-14
        )


SQUARE_CELL = ConvexPolygon([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])


class TestRegionNorms:
    def test_cell_minus_ball_indicator_matches_geometry(self):
        # indicator weight turns the norm into a plain clipped area
        w = indicator_weight(0.25, 2.0)
        got = annular_l1_norm(w, CellMinusBall(SQUARE_CELL, 0.25, np.zeros(2)), 0)
        want = SQUARE_CELL.area - math.pi * 0.25**2
        assert got == pytest.approx(want, rel=1e-11)

    def test_ball_minus_cell_indicator_matches_geometry(self):
        w = indicator_weight(0.25, 2.0)
        got = annular_l1_norm(w, BallMinusCell(1.4, SQUARE_CELL, np.zeros(2)), 0)
        want = math.pi * (1.4**2 - 0.25**2) - (SQUARE_CELL.area - math.pi * 0.25**2)
        assert got == pytest.approx(want, rel=1e-10)

    def test_outer_radius_beyond_support_clips_exactly(self):
        w = indicator_weight(0.25, 1.1)
        a = annular_l1_norm(w, BallMinusCell(1.1, SQUARE_CELL, np.zeros(2)), 0)
        b = annular_l1_norm(w, BallMinusCell(5.0, SQUARE_CELL, np.zeros(2)), 0)
        assert a == pytest.approx(b, rel=1e-12)

    def test_taper_norm_against_mc_oracle(self):
        w = linear_taper_weight(0.25, 1.0)
        center = np.array([0.1, -0.05])
        got = annular_l1_norm(w, CellMinusBall(SQUARE_CELL, 0.25, center), 0)

        def integrand(pts):
            r = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
            inside = (
                (np.abs(pts[:, 0]) <= 0.5) & (np.abs(pts[:, 1]) <= 0.5) & (r >= 0.25)
            )
            return np.where(inside, w.value(r), 0.0)

        est = mc_region_integral(integrand, (-0.5, 0.5, -0.5, 0.5), n=400_000, seed=21)
        assert abs(got - est.value) <= 3 * est.error

    def test_moment_weighted_region_norm(self):
        # moment 2 over cell minus ball, checked against the MC oracle
        w = linear_taper_weight(0.25, 1.0)
        center = np.zeros(2)
        got = annular_l1_norm(w, CellMinusBall(SQUARE_CELL, 0.25, center), 2)

        def integrand(pts):
            r = np.hypot(pts[:, 0], pts[:, 1])
            inside = (np.abs(pts[:, 0]) <= 0.5) & (np.abs(pts[:, 1]) <= 0.5) & (r >= 0.25)
            return np.where(inside, w.value(r) * r**2, 0.0)

        est = mc_region_integral(integrand, (-0.5, 0.5, -0.5, 0.5), n=400_000, seed=22)
        assert abs(got - est.value) <= 3 * est.error


class TestMoments:
    @pytest.mark.parametrize("make", [indicator_weight, linear_taper_weight])
    @pytest.mark.parametrize("n", [-2, -1, 0, 1, 2])
    def test_vector_moments_vanish(self, make, n):
        w = make(0.25, 1.0)
        vec = annulus_vector_moment(w, n)
        scale = radial_moment(w, n + 1)
        assert np.all(np.abs(vec) <= 1e-12 * scale)

    @pytest.mark.parametrize("make", [indicator_weight, linear_taper_weight])
    @pytest.mark.parametrize("n", [-2, -1, 0, 1, 2])
    def test_tensor_moments_isotropic(self, make, n):
        w = make(0.25, 1.0)
        mat = annulus_tensor_moment(w, n)
        want = 0.5 * radial_moment(w, n + 2)
        assert mat[0, 0] == pytest.approx(want, rel=1e-9)
        assert mat[1, 1] == pytest.approx(want, rel=1e-9)
        assert abs(mat[0, 1]) <= 1e-12 * want

    def test_radial_moment_translation_free(self):
        # the moments are defined relative to the evaluation point, so the
        # closed form depends only on the profile
        w = linear_taper_weight(0.1, 0.7)
        assert radial_moment(w, 0) == pytest.approx(
            2 * math.pi * w.radial_integral(0.1, 0.7, 0), rel=1e-15
        )


class TestPositivity:
    def test_reports_positive_floor_on_lattice(self, lattice_decomp):
        k = lattice_decomp.nearest_site([0.0, 0.0])
        w = indicator_weight(0.35, 3.0)
        rep = check_positivity(w, lattice_decomp, k, samples=8)
        assert rep.c0 > 0
        assert rep.integral_min > 0
        assert rep.discrete_min > 0
        assert rep.n_samples == 8

    def test_empty_neighborhood_fails(self, lattice_decomp):
        k = lattice_decomp.nearest_site([0.0, 0.0])
        w = indicator_weight(0.35, 0.9)  # h below the lattice spacing
        with pytest.raises(WeightError):
            check_positivity(w, lattice_decomp, k, samples=4)
