"""Sun cameras for shadow mapping.

A directional light is an orthographic camera looking along the light
rays, so shadows can be computed with the same splatting machinery as the
images: render the scene elevation from the sun, warp, and compare.  The
camera built here has the sun direction in its kernel, an orthogonal pixel
basis on the plane perpendicular to the rays, and a raster sized so the
whole scene box projects inside it with margin to spare.
"""

from dataclasses import dataclass
from math import ceil, cos, radians, sin

import numpy as np

from .affine import AffineCamera

# Scene corners stay at least this many pixels away from the raster edge,
# so bilinear lookups near the silhouette never clamp.
_MARGIN_PX = 8.0


@dataclass(frozen=True)
class SunDirection:
    """Solar position as azimuth (degrees clockwise from north) and
    elevation (degrees above the horizon)."""

    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self):
        if not 0.0 < self.elevation_deg <= 90.0:
            raise ValueError("sun elevation must be in (0, 90], got %r" % (self.elevation_deg,))

    def toward_sun(self):
        """Unit east/north/up vector pointing from the ground to the sun."""
        az = radians(self.azimuth_deg)
        el = radians(self.elevation_deg)
        return np.array([sin(az) * cos(el), cos(az) * cos(el), sin(el)])


def build_sun_camera(sun, frame, bounds, gsd):
    """Orthographic camera aligned with the sun over a scene box.

    Args:
        sun: SunDirection.
        frame: WorldFrame (supplies meters per world unit).
        bounds: (lo, hi) world-coordinate corners of the scene box.
        gsd: meters per pixel of the shadow raster.

    Returns:
        AffineCamera labeled "sun" whose kernel is the sun direction and
        whose raster contains all 8 corners of bounds with >= 8 px margin.
    """
    d = sun.toward_sun()
    if abs(d[2]) > 1.0 - 1e-9:
        # Zenith sun: the perpendicular plane is horizontal, use east/north.
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0])
    else:
        up = np.array([0.0, 0.0, 1.0])
        e1 = np.cross(d, up)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(d, e1)
        e2 /= np.linalg.norm(e2)

    # Pixels per world unit on the perpendicular plane.
    px_per_unit = frame.half_extent / gsd

    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    corners = np.stack(np.meshgrid(*zip(lo, hi), indexing="ij"), axis=-1).reshape(-1, 3)
    proj = px_per_unit * (corners @ np.stack([e1, e2]).T)

    size = []
    offset = []
    for axis in range(2):
        extent = float(proj[:, axis].max() - proj[:, axis].min())
        n = int(ceil(extent + 2.0 * _MARGIN_PX)) + 1
        # Center the footprint so both margins are >= _MARGIN_PX.
        offset.append(0.5 * (n - 1 - extent) - float(proj[:, axis].min()))
        size.append(n)

    width, height = size
    # Fold the pixel-space map px = s*e_i.x + o into NDC = (2 px + 1)/n - 1.
    A = np.stack([2.0 * px_per_unit * e1 / width,
                  2.0 * px_per_unit * e2 / height])
    a = np.array([(2.0 * offset[0] + 1.0) / width - 1.0,
                  (2.0 * offset[1] + 1.0) / height - 1.0])
    return AffineCamera(A=A, a=a, width=width, height=height, label="sun")
