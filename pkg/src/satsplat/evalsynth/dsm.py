"""Digital surface model extraction and comparison.

A DSM is rendered through a synthetic nadir camera and normalized by
accumulated opacity: the raw elevation composite underestimates height
wherever opacity has not saturated, and dividing by the alpha raster
removes that bias.  Pixels with almost no coverage become nodata.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from ..errors import DataError
from ..geocam import AffineCamera
from ..splat import RasterSettings, render
from .oracle import dsm_grid

_MIN_ALPHA = 0.1


@dataclass
class DsmRaster:
    """North-up altitude grid; NaN marks nodata.

    `origin` is the UTM (easting, northing) of the center of the top-left
    pixel; moving one column east adds `gsd` to easting, one row down
    subtracts `gsd` from northing.
    """

    values: np.ndarray    # (H, W) meters, NaN where empty
    gsd: float
    origin: Tuple[float, float]

    def __post_init__(self):
        if self.gsd <= 0:
            raise DataError("DSM GSD must be positive")
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def valid(self):
        return np.isfinite(self.values)


@dataclass
class MaeResult:
    mae: float        # meters
    coverage: float   # fraction of requested pixels that were comparable
    n_pixels: int


def nadir_camera_for(frame, bbox_lo, bbox_hi, gsd):
    """Orthographic north-up camera over a UTM box at the given GSD."""
    lo = np.asarray(bbox_lo, dtype=float)
    hi = np.asarray(bbox_hi, dtype=float)
    width = int(round((hi[0] - lo[0]) / gsd))
    height = int(round((hi[1] - lo[1]) / gsd))
    center_w = frame.world_from_utm(0.5 * (lo + hi))
    s_e = 2.0 * frame.half_extent / (hi[0] - lo[0])
    s_n = 2.0 * frame.half_extent / (hi[1] - lo[1])
    a_mat = np.array([[s_e, 0.0, 0.0], [0.0, -s_n, 0.0]])
    offset = np.array([-center_w[0] * s_e, center_w[1] * s_n])
    return AffineCamera(A=a_mat, a=offset, width=width, height=height,
                        label="nadir-dsm")


def extract_dsm(cloud, frame, gsd, bbox_lo, bbox_hi, settings=RasterSettings()):
    """Render the model from straight above and normalize by coverage.

    Args:
        cloud: GaussianCloud.
        frame: WorldFrame.
        gsd: meters per DSM pixel.
        bbox_lo, bbox_hi: UTM corners of the export area.
        settings: RasterSettings.

    Returns:
        DsmRaster; pixels with accumulated opacity below 0.1 are nodata.
    """
    cam = nadir_camera_for(frame, bbox_lo, bbox_hi, gsd)
    with torch.no_grad():
        targets = render(cloud, cam, frame, what="elevation", settings=settings)
        elev = targets.elevation.numpy()
        alpha = targets.alpha.numpy()
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(alpha >= _MIN_ALPHA, elev / alpha, np.nan)
    lo = np.asarray(bbox_lo, dtype=float)
    hi = np.asarray(bbox_hi, dtype=float)
    return DsmRaster(values=values, gsd=gsd,
                     origin=(lo[0] + gsd / 2.0, hi[1] - gsd / 2.0))


def true_dsm(scene, gsd):
    """Analytic 2.5D surface of a synthetic scene on the same grid."""
    ee, nn = dsm_grid(scene, gsd)
    return DsmRaster(values=scene.height_at(ee, nn), gsd=gsd,
                     origin=(float(ee[0, 0]), float(nn[0, 0])))


def mae(dsm, gt, mask=None):
    """Mean absolute elevation error in meters over comparable pixels.

    Args:
        dsm, gt: DsmRaster on identical grids.
        mask: optional (H, W) binary array restricting the evaluation.

    Returns:
        MaeResult with the error, the fraction of requested pixels that
        had data on both sides, and their count.

    Raises:
        DataError: mismatched grids or nothing to compare.
    """
    if dsm.values.shape != gt.values.shape:
        raise DataError("DSM grids differ: %s vs %s"
                        % (dsm.values.shape, gt.values.shape))
    requested = np.ones(dsm.values.shape, dtype=bool) if mask is None \
        else np.asarray(mask) > 0
    comparable = requested & dsm.valid & gt.valid
    n = int(comparable.sum())
    if n == 0:
        raise DataError("no comparable DSM pixels")
    err = float(np.abs(dsm.values[comparable] - gt.values[comparable]).mean())
    return MaeResult(mae=err, coverage=n / max(int(requested.sum()), 1),
                     n_pixels=n)
