"""Bilinear raster sampling in normalized device coordinates.

Pixel centers sit at ndc = (2*j + 1)/size - 1, so ndc (-1, 1) spans the
image including the half-pixel border.  Samples outside the raster clamp
to the edge.  This matches ``torch.nn.functional.grid_sample`` with
``align_corners=False, padding_mode="border"``, which the differentiable
code paths use; keep the two in sync.
"""

import numpy as np


def ndc_to_pixel(ndc, size):
    """Continuous pixel coordinate of an NDC coordinate for a given size."""
    return (np.asarray(ndc, dtype=float) + 1.0) * (size / 2.0) - 0.5


def pixel_to_ndc(px, size):
    return (2.0 * np.asarray(px, dtype=float) + 1.0) / size - 1.0


def pixel_grid_ndc(height, width):
    """(H, W, 2) array of NDC coordinates of every pixel center."""
    u = pixel_to_ndc(np.arange(width), width)
    v = pixel_to_ndc(np.arange(height), height)
    uu, vv = np.meshgrid(u, v)
    return np.stack([uu, vv], axis=-1)


def sample_ndc(raster, uv):
    """Bilinearly sample a raster at NDC points, clamping to the edge.

    Args:
        raster: (H, W) or (H, W, C) array.
        uv: (..., 2) NDC coordinates, x then y.

    Returns:
        (...) or (..., C) sampled values.
    """
    raster = np.asarray(raster)
    h, w = raster.shape[:2]
    uv = np.asarray(uv, dtype=float)

    px = np.clip(ndc_to_pixel(uv[..., 0], w), 0.0, w - 1.0)
    py = np.clip(ndc_to_pixel(uv[..., 1], h), 0.0, h - 1.0)
    x0 = np.minimum(np.floor(px).astype(int), max(w - 2, 0))
    y0 = np.minimum(np.floor(py).astype(int), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = px - x0
    ty = py - y0
    if raster.ndim > 2:
        tx = tx[..., None]
        ty = ty[..., None]

    return ((1 - ty) * ((1 - tx) * raster[y0, x0] + tx * raster[y0, x1])
            + ty * ((1 - tx) * raster[y1, x0] + tx * raster[y1, x1]))
