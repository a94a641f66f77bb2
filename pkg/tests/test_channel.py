import math

import numpy as np
import pytest

from fdcell.channel import (CellGeometry, ChannelParams, UserLayout, calibrate, pathloss_db,
                            place_users, sample_fading_block, sample_large_scale,
                            sample_slot_gains)
from fdcell.config import SimConfig

GEOM = CellGeometry(40.0, 5.0, 10.0)


def _inside(geom, pts):
    half = geom.side_m / 2
    return np.all(np.abs(pts) <= half) and np.all(np.hypot(*pts.T) >= geom.r_min_m)


def test_uniform_placement():
    lay = place_users(GEOM, 6, 0, np.random.default_rng(0))
    assert lay.positions.shape == (6, 2)
    assert _inside(GEOM, lay.positions)


def test_single_hotspot_placement():
    lay = place_users(GEOM, 6, 1, np.random.default_rng(1))
    c = lay.hotspot_centers[0]
    assert np.all(np.hypot(*(lay.positions - c).T) <= 10.0 + 1e-12)
    assert _inside(GEOM, lay.positions)


def test_three_hotspots_two_users_each():
    lay = place_users(GEOM, 6, 3, np.random.default_rng(2))
    assert np.bincount(lay.hotspot_of_user).tolist() == [2, 2, 2]
    for u, h in enumerate(lay.hotspot_of_user):
        assert np.hypot(*(lay.positions[u] - lay.hotspot_centers[h])) <= 10.0 + 1e-12


def test_uneven_hotspots_round_robin():
    lay = place_users(GEOM, 7, 3, np.random.default_rng(3))
    assert np.bincount(lay.hotspot_of_user).tolist() == [3, 2, 2]


@pytest.mark.parametrize("k, nh", [(0, 0), (3, 4), (3, -1)])
def test_bad_placement_args(k, nh):
    with pytest.raises(ValueError):
        place_users(GEOM, k, nh, np.random.default_rng(0))


def test_placement_invariants_many_draws():
    rng = np.random.default_rng(4)
    pts = [place_users(GEOM, 10, nh, rng).positions for nh in (0, 1, 2, 5) for _ in range(2500)]
    pts = np.concatenate(pts)
    assert len(pts) == 100_000
    assert _inside(GEOM, pts)


def test_pathloss_values():
    assert pathloss_db(1000.0, False) == pytest.approx(147.4, abs=1e-12)
    assert pathloss_db(1000.0, True) == pytest.approx(89.5, abs=1e-12)
    # oracle: direct evaluation of the NLOS formula at 40*sqrt(2) m
    d_km = 40 * math.sqrt(2) / 1000
    oracle = 147.4 + 43.3 * math.log10(d_km)
    assert oracle == pytest.approx(93.385, abs=0.01)
    assert pathloss_db(56.5685, False) == pytest.approx(oracle, abs=1e-3)


def test_pathloss_clamp_and_monotone():
    assert pathloss_db(0.0, False) == pathloss_db(1.0, False)
    d = np.linspace(1, 500, 2000)
    for los in (True, False):
        assert np.all(np.diff(pathloss_db(d, los)) > 0)


def _layout_at(points):
    return UserLayout(np.asarray(points, dtype=float), 0)


def test_large_scale_zero_shadowing():
    params = ChannelParams(0.0, 0.0)
    ls = sample_large_scale(_layout_at([[1000.0, 0.0]]), params, np.random.default_rng(0))
    assert ls.bs_user_db[0] == pytest.approx(-147.4, abs=1e-12)


def test_large_scale_link_count():
    lay = place_users(GEOM, 6, 0, np.random.default_rng(5))
    ls = sample_large_scale(lay, ChannelParams(), np.random.default_rng(6))
    assert np.isfinite(ls.bs_user_db).sum() == 6
    assert np.isfinite(ls.user_user_db).sum() == 30
    assert np.all(np.isneginf(np.diag(ls.user_user_db)))


def test_shadowing_zero_mean():
    # 10^5 NLOS shadowing draws over many two-user layouts at a fixed distance
    lay = _layout_at([[10.0, 0.0], [-10.0, 0.0]])
    rng = np.random.default_rng(7)
    pl = pathloss_db(10.0, False)
    draws = np.concatenate([sample_large_scale(lay, ChannelParams(), rng).bs_user_db + pl
                            for _ in range(50_000)])
    assert draws.size == 100_000
    assert abs(draws.mean()) < 0.05
    assert draws.std() == pytest.approx(4.0, rel=0.02)


def test_slot_gains_pinned_fading():
    ls = sample_large_scale(_layout_at([[30.0, 0.0], [0.0, 30.0]]), ChannelParams(0, 0),
                            np.random.default_rng(0))
    ls.bs_user_db[:] = 0.0
    lg = sample_slot_gains(ls, 1e-10, (1e-13, 2e-13), fading=1.0)
    assert np.all(lg.g == 1.0)
    assert lg.psi == 1e-10 and lg.n_u == 1e-13 and lg.n_d == 2e-13
    assert lg.h[0, 1] == pytest.approx(10 ** (-pathloss_db(math.sqrt(1800), False) / 10))
    assert lg.h[0, 0] == 0.0


def test_slot_gains_deterministic_without_randomness():
    lay = place_users(GEOM, 4, 0, np.random.default_rng(0))
    ls = sample_large_scale(lay, ChannelParams(0, 0), np.random.default_rng(1))
    lg = sample_slot_gains(ls, 0.0, (1, 1), fading=1.0)
    pl = pathloss_db(np.hypot(*lay.positions.T), False)
    assert np.allclose(lg.g, 10 ** (-pl / 10), rtol=1e-12)


def test_fading_unit_mean_and_fresh_per_slot():
    lay = _layout_at([[10.0, 0.0], [0.0, 10.0]])
    ls = sample_large_scale(lay, ChannelParams(0, 0), np.random.default_rng(0))
    ls.bs_user_db[:] = 0.0
    rng = np.random.default_rng(8)
    fb = sample_fading_block(ls, 250_000, rng)
    assert fb.g.size == 500_000
    x = np.concatenate([fb.g.ravel(), sample_fading_block(ls, 250_000, rng).g.ravel()])
    assert abs(x.mean() - 1.0) < 0.01
    assert np.all(fb.g >= 0) and np.all(np.isfinite(fb.h))
    assert not np.array_equal(fb.g[0], fb.g[1])


def test_fading_block_equals_slot_by_slot():
    lay = place_users(GEOM, 5, 0, np.random.default_rng(0))
    ls = sample_large_scale(lay, ChannelParams(), np.random.default_rng(1))
    block = sample_fading_block(ls, 40, np.random.default_rng(9))
    rng = np.random.default_rng(9)
    for s in range(40):
        lg = sample_slot_gains(ls, 0.0, (1, 1), rng)
        assert np.array_equal(lg.g, block.g[s]) and np.array_equal(lg.h, block.h[s])
    rng = np.random.default_rng(9)
    halves = [sample_fading_block(ls, 20, rng) for _ in range(2)]
    assert np.array_equal(np.concatenate([h.g for h in halves]), block.g)


def test_calibration():
    p_u, p_d, n_u, n_d = calibrate(SimConfig())
    dbm = lambda w: 10 * math.log10(w) + 30  # noqa: E731
    # oracle: -174 + 10 log10(1e7) + NF
    assert dbm(n_u) == pytest.approx(-174 + 70 + 8, abs=1e-9)
    assert dbm(n_d) == pytest.approx(-174 + 70 + 9, abs=1e-9)
    pl = 147.4 + 43.3 * math.log10(40 * math.sqrt(2) / 1000)
    assert dbm(p_u) == pytest.approx(5 + pl - 96, abs=1e-9)
    assert dbm(p_d) == pytest.approx(5 + pl - 95, abs=1e-9)
    assert dbm(p_u) == pytest.approx(2.39, abs=0.01)
    assert dbm(p_d) == pytest.approx(3.39, abs=0.01)


def test_geometry_validation():
    with pytest.raises(ValueError):
        CellGeometry(40, 20)
    with pytest.raises(ValueError):
        CellGeometry(-1, 0)
