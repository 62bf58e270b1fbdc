"""World frame tests: the rescaling arithmetic and the altitude form."""

import numpy as np
import pytest

from satsplat.geocam import WorldFrame


def test_bbox_arithmetic():
    f = WorldFrame.from_bbox((0.0, 200.0), (0.0, 200.0), (0.0, 40.0), "31N")
    assert f.half_extent == 100.0
    np.testing.assert_allclose(f.center, [100.0, 100.0, 20.0])
    np.testing.assert_allclose(f.utm_from_world([1.0, 1.0, 0.2]), [200.0, 200.0, 40.0])
    np.testing.assert_allclose(f.world_from_utm([200.0, 200.0, 40.0]), [1.0, 1.0, 0.2])


def test_bbox_maps_into_unit_cube():
    f = WorldFrame.from_bbox((655000.0, 655300.0), (5400000.0, 5400200.0),
                             (60.0, 95.0), "31N")
    corners = np.array([[e, n, h]
                        for e in (655000.0, 655300.0)
                        for n in (5400000.0, 5400200.0)
                        for h in (60.0, 95.0)])
    w = f.world_from_utm(corners)
    assert np.all(np.abs(w) <= 1.0 + 1e-12)
    assert np.max(np.abs(w)) == pytest.approx(1.0)


def test_altitude_form():
    f = WorldFrame.from_bbox((0.0, 300.0), (0.0, 200.0), (10.0, 50.0), "31N")
    assert f.altitude([0.0, 0.0, 0.0]) == pytest.approx(30.0)  # center altitude
    assert (f.altitude([0.0, 0.0, 1.0]) - f.altitude([0.0, 0.0, 0.0])
            == pytest.approx(f.half_extent))
    np.testing.assert_allclose(f.altitude_gradient, [0.0, 0.0, f.half_extent])
    # The affine form and the coordinate map agree everywhere.
    pts = np.random.default_rng(0).uniform(-1, 1, size=(50, 3))
    np.testing.assert_allclose(f.altitude(pts), f.utm_from_world(pts)[:, 2], rtol=1e-12)


def test_geodetic_roundtrip_through_frame():
    f = WorldFrame.from_bbox((448000.0, 448256.0), (5411000.0, 5411256.0),
                             (70.0, 110.0), "31N")
    pts = np.random.default_rng(1).uniform(-1, 1, size=(20, 3))
    lon, lat, alt = f.geodetic_from_world(pts)
    back = f.world_from_geodetic(lon, lat, alt)
    np.testing.assert_allclose(back, pts, atol=1e-9)


def test_degenerate_bbox_rejected():
    with pytest.raises(ValueError):
        WorldFrame.from_bbox((0.0, 100.0), (0.0, 100.0), (5.0, 5.0), "31N")


def test_dict_roundtrip():
    f = WorldFrame.from_bbox((0.0, 300.0), (0.0, 200.0), (10.0, 50.0), "31N")
    g = WorldFrame.from_dict(f.to_dict())
    assert g.zone == f.zone
    assert g.half_extent == f.half_extent
    np.testing.assert_allclose(g.center, f.center)
