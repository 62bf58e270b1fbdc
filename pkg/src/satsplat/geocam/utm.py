"""Universal Transverse Mercator projection on the WGS84 ellipsoid.

Forward and inverse transverse Mercator based on the 6th-order Krueger
series in the transformed (conformal) latitude, as popularized by Karney,
"Transverse Mercator with an accuracy of a few nanometers" (2011).  At the
order kept here the error over a UTM zone is far below a millimeter, which
is plenty for scene frames a few hundred meters across.

Conventions: k0 = 0.9996, false easting 500 000 m, false northing
10 000 000 m in the southern hemisphere.  Zones are identified by strings
like ``"31N"`` or ``"21S"``.
"""

import math

import numpy as np

# WGS84
_A = 6378137.0
_F = 1.0 / 298.257223563
_E2 = _F * (2.0 - _F)
_E = math.sqrt(_E2)
_N = _F / (2.0 - _F)  # third flattening

K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0

# Rectifying radius
_A1 = _A / (1.0 + _N) * (1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0)

# Krueger series coefficients, conformal -> rectifying (forward) ...
_ALPHA = (
    _N / 2.0 - 2.0 / 3.0 * _N**2 + 5.0 / 16.0 * _N**3 + 41.0 / 180.0 * _N**4
    - 127.0 / 288.0 * _N**5 + 7891.0 / 37800.0 * _N**6,
    13.0 / 48.0 * _N**2 - 3.0 / 5.0 * _N**3 + 557.0 / 1440.0 * _N**4
    + 281.0 / 630.0 * _N**5 - 1983433.0 / 1935360.0 * _N**6,
    61.0 / 240.0 * _N**3 - 103.0 / 140.0 * _N**4 + 15061.0 / 26880.0 * _N**5
    + 167603.0 / 181440.0 * _N**6,
    49561.0 / 161280.0 * _N**4 - 179.0 / 168.0 * _N**5
    + 6601661.0 / 7257600.0 * _N**6,
    34729.0 / 80640.0 * _N**5 - 3418889.0 / 1995840.0 * _N**6,
    212378941.0 / 319334400.0 * _N**6,
)
# ... and rectifying -> conformal (inverse).
_BETA = (
    _N / 2.0 - 2.0 / 3.0 * _N**2 + 37.0 / 96.0 * _N**3 - 1.0 / 360.0 * _N**4
    - 81.0 / 512.0 * _N**5 + 96199.0 / 604800.0 * _N**6,
    1.0 / 48.0 * _N**2 + 1.0 / 15.0 * _N**3 - 437.0 / 1440.0 * _N**4
    + 46.0 / 105.0 * _N**5 - 1118711.0 / 3870720.0 * _N**6,
    17.0 / 480.0 * _N**3 - 37.0 / 840.0 * _N**4 - 209.0 / 4480.0 * _N**5
    + 5569.0 / 90720.0 * _N**6,
    4397.0 / 161280.0 * _N**4 - 11.0 / 504.0 * _N**5
    - 830251.0 / 7257600.0 * _N**6,
    4583.0 / 161280.0 * _N**5 - 108847.0 / 3991680.0 * _N**6,
    20648693.0 / 638668800.0 * _N**6,
)


class UnsupportedLatitudeError(ValueError):
    """Latitude outside the UTM validity band (|lat| >= 84 degrees)."""


def zone_from_lonlat(lon, lat):
    """UTM zone string (e.g. "31N") for a longitude/latitude in degrees."""
    number = int((float(lon) + 180.0) // 6.0) + 1
    number = min(max(number, 1), 60)
    return "%d%s" % (number, "N" if float(lat) >= 0.0 else "S")


def zone_central_meridian(zone):
    """Central meridian longitude (degrees) of a zone string."""
    return (int(zone[:-1]) - 1) * 6 - 180 + 3


def _taupf(tau):
    """tan of the conformal latitude from tan of the geographic latitude."""
    tau1 = np.hypot(1.0, tau)
    sig = np.sinh(_E * np.arctanh(_E * tau / tau1))
    return np.hypot(1.0, sig) * tau - sig * tau1


def _tauf(taup):
    """Invert _taupf by Newton iteration (converges in a handful of steps)."""
    e2m = 1.0 - _E2
    tau = taup / e2m
    stol = np.sqrt(np.finfo(float).eps) / 10.0 * np.maximum(1.0, np.abs(taup))
    for _ in range(7):
        taupa = _taupf(tau)
        dtau = ((taup - taupa) * (1.0 + e2m * tau**2)
                / (e2m * np.hypot(1.0, tau) * np.hypot(1.0, taupa)))
        tau = tau + dtau
        if np.all(np.abs(dtau) < stol):
            break
    return tau


def geodetic_to_utm(lon, lat, zone=None):
    """Project geodetic coordinates (degrees) to UTM easting/northing.

    Args:
        lon, lat: scalars or same-shape arrays, degrees.
        zone: optional zone string pinning the projection zone; by default
            the zone of the (first) input point is used.  Scenes spanning a
            zone edge should pin the zone so every point shares one frame.

    Returns:
        (easting, northing, zone): meters, meters, zone string.
    """
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    if np.any(np.abs(lat) >= 84.0):
        raise UnsupportedLatitudeError("latitude beyond +/-84 deg is not supported")
    if zone is None:
        zone = zone_from_lonlat(np.ravel(lon)[0], np.ravel(lat)[0])

    lam = np.radians(lon - zone_central_meridian(zone))
    phi = np.radians(lat)

    tau = np.tan(phi)
    taup = _taupf(tau)
    xi_p = np.arctan2(taup, np.cos(lam))
    eta_p = np.arcsinh(np.sin(lam) / np.hypot(taup, np.cos(lam)))

    xi = xi_p.copy()
    eta = eta_p.copy()
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * np.sin(2 * j * xi_p) * np.cosh(2 * j * eta_p)
        eta += a * np.cos(2 * j * xi_p) * np.sinh(2 * j * eta_p)

    easting = FALSE_EASTING + K0 * _A1 * eta
    northing = K0 * _A1 * xi
    if zone.endswith("S"):
        northing = northing + FALSE_NORTHING_SOUTH
    return easting, northing, zone


def utm_to_geodetic(easting, northing, zone):
    """Inverse projection: UTM easting/northing (meters) to lon/lat degrees."""
    easting = np.asarray(easting, dtype=float)
    northing = np.asarray(northing, dtype=float)
    y = northing - (FALSE_NORTHING_SOUTH if zone.endswith("S") else 0.0)

    xi = y / (K0 * _A1)
    eta = (easting - FALSE_EASTING) / (K0 * _A1)

    xi_p = xi.copy()
    eta_p = eta.copy()
    for j, b in enumerate(_BETA, start=1):
        xi_p -= b * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_p -= b * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

    taup = np.sin(xi_p) / np.hypot(np.sinh(eta_p), np.cos(xi_p))
    tau = _tauf(taup)
    lat = np.degrees(np.arctan(tau))
    lam = np.arctan2(np.sinh(eta_p), np.cos(xi_p))
    lon = np.degrees(lam) + zone_central_meridian(zone)
    return lon, lat
