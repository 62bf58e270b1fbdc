"""Analytic reference renderer for box-world scenes.

Per pixel, a ray is cast along the camera's view direction and
intersected exactly with the ground plane and every box; the first hit
yields the true elevation and albedo, and a second ray toward the sun
yields a hard occlusion bit.  The image is flat-Lambertian: albedo times
a per-camera gain, times the scene ambient where shadowed.

This module deliberately knows nothing about the splatting pipeline (a
test enforces the import boundary): agreement between the two renderers
is evidence, not tautology.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import interp
from ..geocam import localize, view_direction

_EPS = 1e-9
_SHADOW_LIFT = 1e-6   # meters along the surface normal before the sun test


@dataclass(frozen=True)
class OracleAppearance:
    """Radiometry the oracle applies when forming an image."""

    gain: np.ndarray        # (3,) per-camera multiplier

    def __post_init__(self):
        object.__setattr__(self, "gain", np.asarray(self.gain, dtype=float))


@dataclass
class OracleRender:
    image: np.ndarray       # (3, H, W) in [0, 1] before gain clipping
    elevation: np.ndarray   # (H, W) meters
    shadow: np.ndarray      # (H, W) bool, True where sun-occluded
    point: np.ndarray       # (H, W, 3) UTM hit points
    normal: np.ndarray      # (H, W, 3) hit surface normals


def _ray_box(origins, dirs, lo, hi):
    """Slab test: entry/exit parameters of rays against one box.

    Returns (t_near, t_far, axis, sign): the entered face is `axis` with
    orientation `sign`; a miss has t_near > t_far.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
    t0 = (lo - origins) * inv
    t1 = (hi - origins) * inv
    tmin = np.minimum(t0, t1)
    tmax = np.maximum(t0, t1)
    # A ray parallel to a slab never leaves it: the interval is empty when
    # the origin sits outside the slab and unbounded when inside.  Forced
    # after the min/max so the ordering cannot undo it.
    parallel = np.abs(dirs) < _EPS
    outside = (origins < lo) | (origins > hi)
    tmin = np.where(parallel, np.where(outside, np.inf, -np.inf), tmin)
    tmax = np.where(parallel, np.where(outside, -np.inf, np.inf), tmax)
    axis = np.argmax(tmin, axis=-1)
    t_near = np.take_along_axis(tmin, axis[..., None], axis=-1)[..., 0]
    t_far = np.min(tmax, axis=-1)
    sign = np.where(np.take_along_axis(dirs, axis[..., None], axis=-1)[..., 0] > 0,
                    -1.0, 1.0)
    return t_near, t_far, axis, sign


def _first_hit(scene, origins, dirs):
    """First intersection of rays with the scene.

    Args:
        origins: (..., 3) UTM meters, above the scene.
        dirs: (3,) or (..., 3) unit direction (downward for cameras).

    Returns:
        (t, points, normals, box_index) with box_index -1 for ground.
    """
    dirs = np.broadcast_to(np.asarray(dirs, dtype=float), origins.shape)
    with np.errstate(divide="ignore"):
        t_ground = (scene.ground_altitude - origins[..., 2]) / dirs[..., 2]
    t_ground = np.where(t_ground > 0, t_ground, np.inf)

    best_t = t_ground
    box_index = np.full(origins.shape[:-1], -1, dtype=int)
    face = np.full(origins.shape[:-1], 4, dtype=int)   # ground acts like a top
    for k, b in enumerate(scene.boxes):
        t_near, t_far, axis, sign = _ray_box(origins, dirs, b.lo, b.hi)
        hit = (t_near <= t_far) & (t_far > 0) & (t_near < best_t) & (t_near > 0)
        best_t = np.where(hit, t_near, best_t)
        box_index = np.where(hit, k, box_index)
        # Face id from entry axis and orientation: (axis, +) -> 0/2/4.
        face_id = 2 * axis + np.where(sign > 0, 0, 1)
        face = np.where(hit, face_id, face)

    points = origins + best_t[..., None] * dirs
    normals = _FACE_NORMAL_TABLE[face]
    return best_t, points, normals, box_index, face


_FACE_NORMAL_TABLE = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0],
                               [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)


def _albedo_at(scene, points, box_index, face):
    """Surface color at hit points: textured ground or box face paint."""
    out = scene.ground_color(points[..., 0], points[..., 1])
    for k, b in enumerate(scene.boxes):
        for f in range(6):
            sel = (box_index == k) & (face == f)
            if np.any(sel):
                out[sel] = scene.face_color(b, f, points[sel])
    return out


def sun_occluded(scene, points, normals, sun):
    """Hard shadow bit: does a ray toward the sun hit any box?"""
    d = sun.toward_sun()
    origins = points + _SHADOW_LIFT * normals
    occluded = np.zeros(points.shape[:-1], dtype=bool)
    for b in scene.boxes:
        t_near, t_far, _, _ = _ray_box(origins, np.broadcast_to(d, origins.shape),
                                       b.lo, b.hi)
        occluded |= (t_near <= t_far) & (t_far > 0) & (t_near > 0)
    return occluded


def camera_rays(scene, cam, frame=None):
    """Per-pixel ray origins (on the bbox top plane) and the shared view
    direction, both in UTM meters."""
    frame = scene.world_frame() if frame is None else frame
    grid = interp.pixel_grid_ndc(cam.height, cam.width)
    top = float(scene.bbox_hi[2]) + 1.0
    x0 = localize(cam, frame, grid, top)
    origins = frame.utm_from_world(x0)
    d = view_direction(cam)   # world units; the frame scale is isotropic
    return origins, d


def oracle_render(scene, cam, sun, appearance=None, frame=None):
    """Reference render of a scene through an affine camera.

    Args:
        scene: SyntheticScene.
        cam: AffineCamera.
        sun: SunDirection.
        appearance: OracleAppearance or None for unit gain.
        frame: WorldFrame override (defaults to the scene's own).

    Returns:
        OracleRender.
    """
    origins, d = camera_rays(scene, cam, frame)
    _, points, normals, box_index, face = _first_hit(scene, origins, d)
    shadow = sun_occluded(scene, points, normals, sun)

    albedo = _albedo_at(scene, points, box_index, face)
    light = np.where(shadow[..., None], scene.ambient, 1.0)
    gain = appearance.gain if appearance is not None else np.ones(3)
    image = np.clip(albedo * light * gain, 0.0, 1.0)
    return OracleRender(image=np.moveaxis(image, -1, 0),
                        elevation=points[..., 2],
                        shadow=shadow, point=points, normal=normals)


def visibility_counts(scene, cameras, gsd):
    """How many cameras see each point of the true surface.

    The surface is sampled on a nadir grid at the scene's ground sample
    distance; a camera sees a point when the ray from just above the
    surface toward the camera (against its view direction) is clear of
    boxes.

    Returns:
        (H, W) int array aligned with `true_dsm` at the same GSD.
    """
    ee, nn = dsm_grid(scene, gsd)
    h = scene.height_at(ee, nn)
    points = np.stack([ee, nn, h], axis=-1)
    up = np.broadcast_to(np.array([0.0, 0.0, 1.0]), points.shape)
    counts = np.zeros(points.shape[:-1], dtype=int)
    for cam in cameras:
        toward_cam = -view_direction(cam)
        origins = points + _SHADOW_LIFT * up
        blocked = np.zeros(points.shape[:-1], dtype=bool)
        for b in scene.boxes:
            t_near, t_far, _, _ = _ray_box(
                origins, np.broadcast_to(toward_cam, origins.shape), b.lo, b.hi)
            blocked |= (t_near <= t_far) & (t_far > 0) & (t_near > 0)
        counts += ~blocked
    return counts


def dsm_grid(scene, gsd):
    """Pixel-center UTM coordinates of the scene's nadir grid, north up
    (row 0 is the northern edge)."""
    lo, hi = scene.bbox_lo, scene.bbox_hi
    width = int(round((hi[0] - lo[0]) / gsd))
    height = int(round((hi[1] - lo[1]) / gsd))
    es = lo[0] + (np.arange(width) + 0.5) * gsd
    ns = hi[1] - (np.arange(height) + 0.5) * gsd
    return np.meshgrid(es, ns, indexing="xy")
