"""Scene-local world frame.

Optimizing directly in UTM meters is numerically awkward (coordinates of
order 1e5 to 1e7), so the scene is rescaled into a cube: world coordinates
are UTM east/north/altitude, re-centered on the bounding box and divided by
its largest half-extent.  The frame therefore fits inside [-1, 1]^3 and one
world unit equals ``half_extent`` meters along every axis.

Altitude of a world point is the affine form

    altitude(x) = <gradient, x> + offset

with gradient (0, 0, half_extent) and offset the center altitude.  The
rasterizer composites that form per primitive to produce elevation maps.
"""

from dataclasses import dataclass

import numpy as np

from . import utm


@dataclass(frozen=True)
class WorldFrame:
    """Isotropic scaling between UTM meters and scene coordinates."""

    zone: str
    center: np.ndarray      # (3,) east, north, altitude of the bbox center
    half_extent: float      # meters per world unit (largest bbox half-size)

    @classmethod
    def from_bbox(cls, east, north, alt, zone):
        """Build from (min, max) pairs for easting, northing and altitude."""
        lo = np.array([east[0], north[0], alt[0]], dtype=float)
        hi = np.array([east[1], north[1], alt[1]], dtype=float)
        if np.any(hi <= lo):
            raise ValueError("degenerate bounding box: %s .. %s" % (lo, hi))
        center = 0.5 * (lo + hi)
        half = float(np.max(0.5 * (hi - lo)))
        return cls(zone=zone, center=center, half_extent=half)

    def world_from_utm(self, enh):
        """Map (..., 3) east/north/altitude meters to world coordinates."""
        return (np.asarray(enh, dtype=float) - self.center) / self.half_extent

    def utm_from_world(self, xyz):
        return np.asarray(xyz, dtype=float) * self.half_extent + self.center

    def world_from_geodetic(self, lon, lat, alt):
        e, n, _ = utm.geodetic_to_utm(lon, lat, zone=self.zone)
        enh = np.stack(np.broadcast_arrays(e, n, np.asarray(alt, dtype=float)), axis=-1)
        return self.world_from_utm(enh)

    def geodetic_from_world(self, xyz):
        enh = self.utm_from_world(xyz)
        lon, lat = utm.utm_to_geodetic(enh[..., 0], enh[..., 1], self.zone)
        return lon, lat, enh[..., 2]

    def altitude(self, xyz):
        """Altitude in meters of world points, an affine function of x."""
        return np.asarray(xyz, dtype=float)[..., 2] * self.half_extent + self.center[2]

    @property
    def altitude_gradient(self):
        """(3,) gradient of ``altitude`` with respect to world coordinates."""
        return np.array([0.0, 0.0, self.half_extent])

    @property
    def altitude_offset(self):
        """altitude(0), the altitude of the frame center in meters."""
        return float(self.center[2])

    def to_dict(self):
        return {
            "zone": self.zone,
            "center": [float(v) for v in self.center],
            "half_extent": float(self.half_extent),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(zone=str(d["zone"]),
                   center=np.asarray(d["center"], dtype=float),
                   half_extent=float(d["half_extent"]))
