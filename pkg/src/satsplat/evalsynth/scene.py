"""Synthetic box-world scenes with known geometry.

A scene is a textured ground plane plus a few axis-aligned boxes sitting
on it, anchored at real UTM coordinates so the whole geodetic pipeline
(RPC fitting, affine approximation, world frame) runs unchanged.  The
matching ray-cast renderer lives in ``oracle``; everything here is plain
geometry and bookkeeping.

Cameras are generated the way the data acquisition works in the large:
each view gets a true oblique parallel projection with a touch of
quadratic distortion, a rational polynomial model is fitted to it, and
the affine camera the reconstruction uses is fitted to that in turn.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ConfigError
from ..geocam import (AffineCamera, RPCModel, SunDirection, WorldFrame,
                      fit_affine_to_projector, fit_rpc, utm)

# Faces in the order +e, -e, +n, -n, top, bottom.
_FACE_NORMALS = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0],
                          [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in UTM meters; albedo is one RGB triple or six
    (one per face, ordered +e, -e, +n, -n, top, bottom)."""

    center: np.ndarray        # (3,) easting, northing, altitude
    half_extents: np.ndarray  # (3,) meters
    albedo: np.ndarray        # (3,) or (6, 3)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "half_extents",
                           np.asarray(self.half_extents, dtype=float))
        object.__setattr__(self, "albedo", np.asarray(self.albedo, dtype=float))
        if self.half_extents.shape != (3,) or np.any(self.half_extents <= 0):
            raise ConfigError("box half extents must be 3 positive numbers")
        if self.albedo.shape not in ((3,), (6, 3)):
            raise ConfigError("box albedo must be (3,) or (6, 3)")

    def face_albedo(self, face):
        return self.albedo if self.albedo.ndim == 1 else self.albedo[face]

    @property
    def lo(self):
        return self.center - self.half_extents

    @property
    def hi(self):
        return self.center + self.half_extents

    @property
    def top_altitude(self):
        return float(self.center[2] + self.half_extents[2])


@dataclass(frozen=True)
class SyntheticScene:
    """Ground plane plus boxes inside a UTM bounding box."""

    zone: str
    bbox_lo: np.ndarray          # (3,) easting, northing, altitude
    bbox_hi: np.ndarray          # (3,)
    ground_altitude: float
    ground_albedo: np.ndarray    # (3,) base color before texturing
    boxes: Tuple[Box, ...] = ()
    # (amplitude, period_a, period_b) triples, summed; several octaves so
    # every surface carries gradients the reconstruction can lock onto.
    texture_bands: Tuple[Tuple[float, float, float], ...] = (
        (0.20, 11.0, 17.0), (0.15, 5.3, 7.1), (0.10, 2.9, 4.3))
    ambient: np.ndarray = field(default_factory=lambda: np.array([0.22, 0.26, 0.32]))

    def __post_init__(self):
        object.__setattr__(self, "bbox_lo", np.asarray(self.bbox_lo, dtype=float))
        object.__setattr__(self, "bbox_hi", np.asarray(self.bbox_hi, dtype=float))
        object.__setattr__(self, "ground_albedo",
                           np.asarray(self.ground_albedo, dtype=float))
        object.__setattr__(self, "ambient", np.asarray(self.ambient, dtype=float))
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if np.any(self.bbox_hi <= self.bbox_lo):
            raise ConfigError("degenerate scene bbox")
        lo, hi = self.bbox_lo, self.bbox_hi
        if not lo[2] <= self.ground_altitude <= hi[2]:
            raise ConfigError("ground plane outside the scene bbox")
        for b in self.boxes:
            if np.any(b.lo < lo - 1e-9) or np.any(b.hi > hi + 1e-9):
                raise ConfigError("box extends outside the scene bbox")

    def world_frame(self):
        return WorldFrame.from_bbox((self.bbox_lo[0], self.bbox_hi[0]),
                                    (self.bbox_lo[1], self.bbox_hi[1]),
                                    (self.bbox_lo[2], self.bbox_hi[2]),
                                    self.zone)

    def texture(self, a, b):
        """Multiplicative surface texture over two surface coordinates, a
        positive multi-band field."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        out = np.ones(np.broadcast(a, b).shape)
        for amp, pa, pb in self.texture_bands:
            out = out + amp * np.sin(2 * np.pi * a / pa) * np.sin(2 * np.pi * b / pb)
        return out

    def ground_color(self, easting, northing):
        """(..., 3) textured ground albedo, clipped to [0, 1]."""
        t = self.texture(easting, northing)[..., None]
        return np.clip(self.ground_albedo * t, 0.0, 1.0)

    def face_color(self, box, face, points):
        """(..., 3) textured albedo of one box face at surface points.

        Walls reuse the texture field over (horizontal coordinate,
        stretched altitude); the stretch gives a story-scale pattern on
        faces only a few meters tall.
        """
        pts = np.asarray(points, dtype=float)
        if face >= 4:
            t = self.texture(pts[..., 0], pts[..., 1])
        elif face < 2:
            t = self.texture(pts[..., 1], pts[..., 2] * 3.0)
        else:
            t = self.texture(pts[..., 0], pts[..., 2] * 3.0)
        return np.clip(box.face_albedo(face) * t[..., None], 0.0, 1.0)

    def height_at(self, easting, northing):
        """True 2.5D surface altitude: ground or the tallest covering box."""
        e = np.asarray(easting, dtype=float)
        n = np.asarray(northing, dtype=float)
        h = np.full(np.broadcast(e, n).shape, self.ground_altitude)
        for b in self.boxes:
            inside = ((e >= b.lo[0]) & (e <= b.hi[0])
                      & (n >= b.lo[1]) & (n <= b.hi[1]))
            h = np.where(inside, np.maximum(h, b.top_altitude), h)
        return h


@dataclass(frozen=True)
class TrueCamera:
    """Oblique parallel projection with mild quadratic distortion, the
    stand-in for a physical pushbroom sensor.  Maps UTM points to pixel
    coordinates; ``kappa`` is the distortion strength in 1/meters."""

    center: np.ndarray    # (3,) UTM point mapped to the image center
    axis_u: np.ndarray    # (3,) unit vector, meters along image +x
    axis_v: np.ndarray    # (3,) unit vector, meters along image +y
    gsd: float            # meters per pixel
    n_px: int             # square image side
    kappa: float = 0.0

    def project_utm(self, points):
        """(..., 3) UTM meters -> (..., 2) pixel coordinates."""
        d = np.asarray(points, dtype=float) - self.center
        u = d @ self.axis_u
        v = d @ self.axis_v
        u = u + self.kappa * (u * u - 0.5 * v * v)
        v = v + self.kappa * (v * v - 0.5 * u * u)
        half = (self.n_px - 1) / 2.0
        return np.stack([u / self.gsd + half, v / self.gsd + half], axis=-1)


@dataclass(frozen=True)
class SceneView:
    """One acquisition: the fitted RPC, the affine camera derived from
    it, the sun position, and the radiometric gain the oracle applies."""

    name: str
    rpc: RPCModel
    camera: AffineCamera
    sun: SunDirection
    gain: np.ndarray       # (3,)


@dataclass(frozen=True)
class SceneBundle:
    """Everything `generate_scene` hands to the renderer and the tests."""

    scene: SyntheticScene
    frame: WorldFrame
    views: Tuple[SceneView, ...]
    gsd: float
    seed: int


def _oblique_axes(azimuth_deg, off_nadir_deg):
    """Image-plane axes of a parallel projection looking along the given
    direction (azimuth clockwise from north, off-nadir from vertical)."""
    az = np.radians(azimuth_deg)
    on = np.radians(off_nadir_deg)
    d = np.array([np.sin(az) * np.sin(on), np.cos(az) * np.sin(on), -np.cos(on)])
    up = np.array([0.0, 0.0, 1.0])
    axis_u = np.cross(d, up)
    axis_u /= np.linalg.norm(axis_u)
    axis_v = np.cross(d, axis_u)
    return axis_u, axis_v


def rpc_from_true_camera(true_cam, scene, zone, n_grid=9):
    """Fit a rational polynomial model to the true projector over the
    scene's geodetic footprint."""
    lo, hi = scene.bbox_lo, scene.bbox_hi
    es = np.linspace(lo[0], hi[0], n_grid)
    ns = np.linspace(lo[1], hi[1], n_grid)
    hs = np.linspace(lo[2], hi[2], 7)
    ee, nn, hh = np.meshgrid(es, ns, hs, indexing="ij")
    lon, lat = utm.utm_to_geodetic(ee.ravel(), nn.ravel(), zone)
    px = true_cam.project_utm(np.stack([ee.ravel(), nn.ravel(), hh.ravel()], axis=-1))
    return fit_rpc(lon, lat, np.asarray(hh.ravel()), px[..., 0], px[..., 1])


def affine_from_rpc(rpc, frame, bbox_lo, bbox_hi, width, height, rng=None):
    """Affine camera approximating an RPC over a UTM box, plus the fit
    residual statistics in pixels."""
    return fit_affine_to_projector(rpc, frame, bbox_lo, bbox_hi, width, height,
                                   rng=rng)


def generate_scene(seed, n_views=10, n_boxes=3, size=64.0, gsd=0.5,
                   anchor=(448000.0, 5411000.0), zone="31N",
                   ground_altitude=2.0, box_height_range=(5.0, 20.0)):
    """Deterministic scene + cameras + suns from one seed.

    Cameras get azimuths spread around the full circle with jitter and
    off-nadir angles up to 30 degrees; sun elevations stay in the 30-70
    degree band where shadows are present but finite.

    Args:
        seed: RNG seed; equal seeds give identical bundles.
        n_views: number of satellite acquisitions.
        n_boxes: number of boxes (0 gives a flat textured plane).
        size: scene side length in meters.
        gsd: image ground sample distance in meters per pixel.
        anchor: UTM (easting, northing) of the scene's lower corner.
        zone: UTM zone label.
        ground_altitude: plane altitude in meters.
        box_height_range: (min, max) box heights in meters.

    Returns:
        SceneBundle.
    """
    if n_views < 1:
        raise ConfigError("need at least one view")
    rng = np.random.default_rng(seed)
    lo = np.array([anchor[0], anchor[1], ground_altitude - 2.0])
    top = ground_altitude + box_height_range[1]
    hi = np.array([anchor[0] + size, anchor[1] + size, top + 3.0])

    # Footprint half-sizes cap at a sixth of the scene so boxes stay
    # clearly separated; tiny test scenes shrink the lower bound with it.
    half_min = min(4.0, size / 8.0)
    boxes = []
    for _ in range(n_boxes):
        height = rng.uniform(*box_height_range)
        half = np.array([rng.uniform(half_min, size / 6.0),
                         rng.uniform(half_min, size / 6.0), height / 2.0])
        margin = half[:2] + 2.0
        center_en = np.array([rng.uniform(lo[0] + margin[0], hi[0] - margin[0]),
                              rng.uniform(lo[1] + margin[1], hi[1] - margin[1])])
        albedo = rng.uniform(0.25, 0.95, (6, 3))
        boxes.append(Box(center=np.array([center_en[0], center_en[1],
                                          ground_altitude + half[2]]),
                         half_extents=half, albedo=albedo))

    scene = SyntheticScene(zone=zone, bbox_lo=lo, bbox_hi=hi,
                           ground_altitude=ground_altitude,
                           ground_albedo=rng.uniform(0.35, 0.75, 3),
                           boxes=tuple(boxes))
    frame = scene.world_frame()

    n_px = int(round(size / gsd))
    scene_center = 0.5 * (lo + hi)
    views = []
    for i in range(n_views):
        azimuth = 360.0 * i / n_views + rng.uniform(-12.0, 12.0)
        off_nadir = rng.uniform(8.0, 30.0)
        axis_u, axis_v = _oblique_axes(azimuth, off_nadir)
        true_cam = TrueCamera(center=scene_center, axis_u=axis_u, axis_v=axis_v,
                              gsd=gsd, n_px=n_px, kappa=1e-7)
        rpc = rpc_from_true_camera(true_cam, scene, zone)
        camera, stats = affine_from_rpc(rpc, frame, lo, hi, n_px, n_px,
                                        rng=np.random.default_rng(seed * 1000 + i))
        sun = SunDirection(azimuth_deg=float(rng.uniform(0.0, 360.0)),
                           elevation_deg=float(rng.uniform(30.0, 70.0)))
        gain = rng.uniform(0.85, 1.15, 3)
        views.append(SceneView(name="view_%02d" % i, rpc=rpc, camera=camera,
                               sun=sun, gain=gain))
    return SceneBundle(scene=scene, frame=frame, views=tuple(views),
                       gsd=gsd, seed=seed)
