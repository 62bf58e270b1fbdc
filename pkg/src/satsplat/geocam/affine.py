"""Affine push-broom camera approximation.

A satellite image of a scene a few hundred meters across sees essentially
parallel rays, so the full world -> UTM -> geodetic -> RPC -> pixel chain
is fit once per image by an affine map u = A x + a from world coordinates
to NDC.  The residual of that fit is a few hundredths of a pixel, far
below the reconstruction noise floor.

The linear part A is 2x3 with a one-dimensional kernel: the viewing
direction.  Appending the altitude functional of the world frame to A
yields an invertible 3x3 system, which is what ``localize`` solves to
invert the projection at a known altitude.
"""

from dataclasses import dataclass

import numpy as np

from .. import interp
from .frame import WorldFrame


@dataclass(frozen=True)
class AffineCamera:
    """Affine world -> NDC map with its raster size."""

    A: np.ndarray       # (2, 3)
    a: np.ndarray       # (2,)
    width: int
    height: int
    label: str = "satellite"

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float).reshape(2, 3))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(2))

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "a": self.a.tolist(),
            "width": int(self.width),
            "height": int(self.height),
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(A=np.asarray(d["A"], dtype=float),
                   a=np.asarray(d["a"], dtype=float),
                   width=int(d["width"]), height=int(d["height"]),
                   label=str(d.get("label", "satellite")))


@dataclass(frozen=True)
class FitStats:
    """Residuals of an affine camera fit, in pixels."""

    mean_px: float
    max_px: float


def project(cam, x):
    """Apply the camera map: (..., 3) world points to (..., 2) NDC."""
    x = np.asarray(x, dtype=float)
    return x @ cam.A.T + cam.a


def fit_affine(sampler, bounds, width, height, label="satellite",
               n_random=100, rng=None):
    """Least-squares affine fit of an arbitrary world -> NDC projection.

    Samples a 5x5x5 regular grid over ``bounds`` plus ``n_random`` uniform
    points (over-determined, keeps the normal equations well conditioned),
    evaluates ``sampler`` on all of them and solves for (A, a).

    Args:
        sampler: maps an (N, 3) world-point array to (N, 2) NDC points.
        bounds: (lo, hi) pair of 3-vectors in world coordinates.
        width, height: raster size the NDC refers to, recorded on the camera.
        n_random: extra uniform samples on top of the grid.
        rng: numpy Generator for the random samples.

    Returns:
        (AffineCamera, FitStats) with residuals reported in pixels.
    """
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    axes = [np.linspace(lo[i], hi[i], 5) for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    if n_random > 0:
        rng = np.random.default_rng(rng)
        pts = np.concatenate([grid, rng.uniform(lo, hi, size=(n_random, 3))])
    else:
        pts = grid

    uv = np.asarray(sampler(pts), dtype=float)
    design = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
    sol, _, rank, _ = np.linalg.lstsq(design, uv, rcond=None)
    if rank < 4:
        raise np.linalg.LinAlgError("degenerate sampling: affine fit is rank %d" % rank)

    cam = AffineCamera(A=sol[:3].T, a=sol[3], width=width, height=height, label=label)
    res = uv - project(cam, pts)
    res_px = np.hypot(res[:, 0] * width / 2.0, res[:, 1] * height / 2.0)
    return cam, FitStats(mean_px=float(res_px.mean()), max_px=float(res_px.max()))


def fit_affine_to_projector(projector, frame, bbox_lo, bbox_hi, width, height,
                            label="satellite", rng=None):
    """Affine camera approximating a geodetic pixel projector over a UTM
    box.

    Args:
        projector: object with project(lon, lat, alt) -> (col, row) in
            pixel coordinates (an RPC model, or anything shaped like one).
        frame: WorldFrame tying world coordinates to the ellipsoid.
        bbox_lo, bbox_hi: (3,) UTM corners of the fitting domain.
        width, height: raster size; the fit happens in its NDC.
        rng: numpy Generator for the random fitting samples.

    Returns:
        (AffineCamera, FitStats).
    """

    def sampler(xyz):
        lon, lat, alt = frame.geodetic_from_world(xyz)
        col, row = projector.project(lon, lat, alt)
        return np.stack([(col - (width - 1) / 2.0) / (width / 2.0),
                         (row - (height - 1) / 2.0) / (height / 2.0)], axis=-1)

    bounds = (frame.world_from_utm(np.asarray(bbox_lo, dtype=float)),
              frame.world_from_utm(np.asarray(bbox_hi, dtype=float)))
    return fit_affine(sampler, bounds, width, height, label=label, rng=rng)


def view_direction(cam, frame=None):
    """Unit world vector spanning the kernel of the camera's linear part.

    The sign is chosen so altitude decreases along the returned vector,
    i.e. it points from the camera toward the ground.  ``frame`` supplies
    the altitude functional; by default up is the world z axis.
    """
    d = np.cross(cam.A[0], cam.A[1])
    norm = np.linalg.norm(d)
    if norm < 1e-12 * max(np.linalg.norm(cam.A[0]) * np.linalg.norm(cam.A[1]), 1e-300):
        raise np.linalg.LinAlgError("camera linear part is rank deficient")
    d = d / norm
    g = frame.altitude_gradient if frame is not None else np.array([0.0, 0.0, 1.0])
    return -d if float(d @ g) > 0.0 else d


def localize(cam, frame, u, h):
    """Invert the projection at a known altitude.

    Solves the 3x3 system stacking the camera rows with the altitude
    gradient: A x = u - a and <g, x> = h - e0.

    Args:
        cam: AffineCamera.
        frame: WorldFrame providing the altitude functional.
        u: (..., 2) NDC points.
        h: altitude in meters, scalar or broadcastable to u[..., 0].

    Returns:
        (..., 3) world points projecting to u at altitude h.
    """
    u = np.asarray(u, dtype=float)
    m = np.concatenate([cam.A, frame.altitude_gradient[None, :]], axis=0)
    dh = np.broadcast_to(np.asarray(h, dtype=float) - frame.altitude_offset,
                         u.shape[:-1])
    rhs = np.concatenate([np.moveaxis(u - cam.a, -1, 0), dh[None]], axis=0)
    try:
        sol = np.linalg.solve(m, rhs.reshape(3, -1))
    except np.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError("camera views along the level sets: %s" % e)
    return np.moveaxis(sol.reshape((3,) + u.shape[:-1]), 0, -1)


def footprint_mask(cam, frame, bbox_lo, bbox_hi, altitude=None):
    """Raster of pixels whose view ray stays inside the scene's ground
    footprint.

    Oblique images of a small scene see terrain beyond the modeled box
    near their borders; nothing in the model can explain those pixels, so
    data terms exclude them.  Membership is decided where the ray crosses
    ``altitude`` (the box floor when omitted).

    Args:
        cam: AffineCamera.
        frame: WorldFrame.
        bbox_lo, bbox_hi: (3,) UTM corners of the modeled box.
        altitude: test altitude in meters; default is the box floor.

    Returns:
        (height, width) float array of zeros and ones.
    """
    lo = np.asarray(bbox_lo, dtype=float)
    hi = np.asarray(bbox_hi, dtype=float)
    if altitude is None:
        altitude = float(lo[2])
    xs = (np.arange(cam.width) + 0.5) / cam.width * 2.0 - 1.0
    ys = (np.arange(cam.height) + 0.5) / cam.height * 2.0 - 1.0
    u = np.stack(np.meshgrid(xs, ys), axis=-1)
    pts = frame.utm_from_world(localize(cam, frame, u, altitude))
    ok = ((pts[..., 0] >= lo[0]) & (pts[..., 0] <= hi[0])
          & (pts[..., 1] >= lo[1]) & (pts[..., 1] <= hi[1]))
    return ok.astype(float)


def homologous(cam_a, cam_b, elev_a, frame, u):
    """Transfer pixels of camera A to camera B through A's elevation map.

    Each NDC point u is lifted to 3D at the altitude the elevation raster
    of camera A reports at u (bilinear, clamped), then projected into
    camera B.

    Args:
        cam_a, cam_b: AffineCamera pair.
        elev_a: (H, W) altitude raster in meters aligned with cam_a, or a
            scalar for a flat scene.
        frame: WorldFrame.
        u: (..., 2) NDC points in camera A.

    Returns:
        (..., 2) NDC points in camera B.
    """
    u = np.asarray(u, dtype=float)
    if np.ndim(elev_a) == 0:
        h = np.broadcast_to(float(elev_a), u.shape[:-1])
    else:
        h = interp.sample_ndc(np.asarray(elev_a, dtype=float), u)
    return project(cam_b, localize(cam_a, frame, u, h))
