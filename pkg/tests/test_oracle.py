import numpy as np
import pytest

from voromps.oracle import grid_integral, mc_region_integral


def disk_indicator(pts):
    return (pts[:, 0] ** 2 + pts[:, 1] ** 2 <= 1.0).astype(float)


def test_mc_unit_disk_area_within_three_se():
    est = mc_region_integral(disk_indicator, (-1, 1, -1, 1), n=400_000, seed=3)
    assert est.error > 0
    assert abs(est.value - np.pi) <= 3 * est.error


def test_mc_deterministic_per_seed():
    a = mc_region_integral(disk_indicator, (-1, 1, -1, 1), n=50_000, seed=9)
    b = mc_region_integral(disk_indicator, (-1, 1, -1, 1), n=50_000, seed=9)
    c = mc_region_integral(disk_indicator, (-1, 1, -1, 1), n=50_000, seed=10)
    assert a.value == b.value and a.error == b.error
    assert a.value != c.value


def test_mc_rejects_bad_bbox():
    with pytest.raises(ValueError):
        mc_region_integral(disk_indicator, (1, -1, 0, 1), n=100, seed=0)


def test_grid_integral_smooth_exact_value():
    est = grid_integral(lambda p: p[:, 0] ** 2 + p[:, 1] ** 2, (0, 1, 0, 1))
    # reported error is the halving difference, an upper bound on the
    # remaining error for this smooth integrand
    assert abs(est.value - 2.0 / 3.0) <= est.error + 1e-12
    assert est.error < 1e-4


def test_grid_integral_rejects_odd_resolution():
    with pytest.raises(ValueError):
        grid_integral(lambda p: p[:, 0], (0, 1, 0, 1), resolution=7)
