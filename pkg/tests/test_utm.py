"""UTM projection tests.

The forward projection is checked against an independent oracle: on the
central meridian the transverse Mercator northing is exactly k0 times the
meridian arc length, which we compute by adaptive quadrature of the
meridian curvature radius.  Everything else is round trips and the
defining constants.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from satsplat.geocam import utm
from satsplat.geocam.utm import UnsupportedLatitudeError, geodetic_to_utm, utm_to_geodetic

_A = 6378137.0
_F = 1.0 / 298.257223563
_E2 = _F * (2.0 - _F)


def meridian_arc_oracle(lat_deg):
    """Arc length of the meridian from the equator, by quadrature."""
    def radius(phi):
        return _A * (1.0 - _E2) / (1.0 - _E2 * math.sin(phi) ** 2) ** 1.5

    arc, err = quad(radius, 0.0, math.radians(lat_deg), epsabs=1e-8)
    assert err < 1e-6
    return arc


def test_central_meridian_easting():
    e, n, zone = geodetic_to_utm(3.0, 48.0)
    assert zone == "31N"
    assert e == pytest.approx(500000.0, abs=1e-6)


def test_equator_northing_zero():
    _, n, _ = geodetic_to_utm(4.7, 0.0)
    assert n == pytest.approx(0.0, abs=1e-6)


def test_southern_false_northing():
    _, n_south, zone = geodetic_to_utm(3.0, -0.001)
    assert zone == "31S"
    _, n_north, _ = geodetic_to_utm(3.0, 0.001)
    assert n_south == pytest.approx(10000000.0 - n_north, abs=1e-6)


@pytest.mark.parametrize("lat", [0.5, 12.0, 33.3, 48.8566, 60.0, 83.0, -27.1])
def test_northing_matches_meridian_arc_quadrature(lat):
    zone = "31N" if lat >= 0 else "31S"
    _, n, _ = geodetic_to_utm(3.0, lat, zone=zone)
    if lat < 0:
        n -= 10000000.0
    assert n == pytest.approx(0.9996 * meridian_arc_oracle(lat), abs=1e-3)


def test_zone_numbering():
    assert utm.zone_from_lonlat(2.35, 48.85) == "31N"
    assert utm.zone_from_lonlat(-58.4, -34.6) == "21S"
    assert utm.zone_central_meridian("31N") == 3
    assert utm.zone_central_meridian("21S") == -57


def test_polar_latitude_rejected():
    with pytest.raises(UnsupportedLatitudeError):
        geodetic_to_utm(10.0, 84.5)


def test_roundtrip_grid():
    lon, lat = np.meshgrid(np.linspace(0.2, 5.8, 9), np.linspace(-80, 80, 17))
    e, n, zone = geodetic_to_utm(lon, lat, zone="31N")
    lon2, lat2 = utm_to_geodetic(e, n, zone)
    np.testing.assert_allclose(lon2, lon, atol=1e-9)
    np.testing.assert_allclose(lat2, lat, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(lon=st.floats(-3.0, 9.0), lat=st.floats(-83.9, 83.9))
def test_roundtrip_property(lon, lat):
    e, n, zone = geodetic_to_utm(lon, lat, zone="31N")
    lon2, lat2 = utm_to_geodetic(e, n, zone)
    assert abs(float(lon2) - lon) < 1e-9
    assert abs(float(lat2) - lat) < 1e-9


def test_scale_factor_at_center():
    # k0 is the point scale on the central meridian: 1 m north in geodetic
    # terms maps to ~0.9996 m of northing.
    lat = 45.0
    dlat = 1.0 / 111132.0  # roughly one meter of latitude, in degrees
    _, n0, _ = geodetic_to_utm(3.0, lat)
    _, n1, _ = geodetic_to_utm(3.0, lat + dlat)
    arc = meridian_arc_oracle(lat + dlat) - meridian_arc_oracle(lat)
    assert (n1 - n0) / arc == pytest.approx(0.9996, abs=1e-9)
