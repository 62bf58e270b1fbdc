"""Shadow mapping and image formation.

Shadows come from a second render of the same primitives through the sun
camera: for every satellite pixel, the scene point it sees is re-projected
into the sun's view and the two elevation renders are compared.  A point
below the surface the sun sees (positive height gap) is occluded and gets
darkened as if the light crossed an absorbing medium of density rho.  The
observed image is then the color-corrected albedo render modulated by the
lighting coefficient.

Gradients flow through both elevation renders and the bilinear resampling
values, but the warp coordinates themselves are detached: the sampling
locations are treated as fixed per step, which keeps early optimization
from collapsing geometry to dodge shadow gradients.
"""

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from . import interp
from .geocam import homologous


@dataclass(frozen=True)
class ShadingConfig:
    """Shadow medium density in 1/meters: a 0.3 m occlusion at the default
    darkens to about 5%."""

    rho: float = 10.0

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("shadow density rho must be positive")


class CameraAppearance:
    """Per-image radiometric model: an affine color correction applied to
    the intrinsic albedos, and an ambient color floor for shadowed areas.

    The color map starts as the identity; ambient starts mid-gray.  Both
    are trainable (the ambient through a logistic to stay in (0, 1)).
    """

    def __init__(self):
        def param(v):
            t = torch.as_tensor(v, dtype=torch.float64).clone()
            t.requires_grad_(True)
            return t

        self.color_matrix = param(np.eye(3))
        self.color_offset = param(np.zeros(3))
        self.ambient_logits = param(np.zeros(3))

    @property
    def ambient(self):
        return torch.sigmoid(self.ambient_logits)

    def parameters(self):
        return [self.color_matrix, self.color_offset, self.ambient_logits]

    def state_dict(self):
        return {
            "color_matrix": self.color_matrix.detach().numpy().tolist(),
            "color_offset": self.color_offset.detach().numpy().tolist(),
            "ambient_logits": self.ambient_logits.detach().numpy().tolist(),
        }

    @classmethod
    def from_state_dict(cls, d):
        app = cls()
        with torch.no_grad():
            app.color_matrix.copy_(torch.as_tensor(d["color_matrix"], dtype=torch.float64))
            app.color_offset.copy_(torch.as_tensor(d["color_offset"], dtype=torch.float64))
            app.ambient_logits.copy_(torch.as_tensor(d["ambient_logits"], dtype=torch.float64))
        return app


@dataclass
class ShadowBuffers:
    """Intermediate shadow rasters for one satellite/sun camera pair."""

    delta_h: torch.Tensor   # (H, W) meters
    darkening: torch.Tensor  # (H, W) in (0, 1]
    lighting: torch.Tensor   # (3, H, W)


def warp_grid(cam_a, cam_b, elev_a, frame):
    """Homologous sampling locations for every pixel of camera A, as a
    (1, H, W, 2) NDC grid in camera B.  Never differentiated: the
    elevation raster is consumed as plain numbers."""
    elev_np = elev_a.detach().numpy() if torch.is_tensor(elev_a) else np.asarray(elev_a)
    u = interp.pixel_grid_ndc(cam_a.height, cam_a.width)
    uv = homologous(cam_a, cam_b, elev_np, frame, u)
    return torch.from_numpy(uv).unsqueeze(0)


def resample(raster, grid):
    """Bilinear clamp-to-edge sampling of (H, W) or (C, H, W) at a
    (1, H', W', 2) NDC grid; differentiable in the raster values."""
    single = raster.dim() == 2
    inp = raster.unsqueeze(0) if not single else raster.unsqueeze(0).unsqueeze(0)
    out = F.grid_sample(inp, grid, mode="bilinear", padding_mode="border",
                        align_corners=False)
    return out[0, 0] if single else out[0]


def delta_h(cam_a, cam_sun, elev_a, elev_sun, frame, grid=None):
    """Height of the sun-visible surface above the satellite-visible one.

    Positive values mean the point camera A sees lies below what the sun
    camera sees along the same ray, i.e. it is occluded.

    Args:
        cam_a, cam_sun: AffineCamera pair.
        elev_a: (H, W) elevation render of camera A (torch, on-graph).
        elev_sun: (Hs, Ws) elevation render of the sun camera.
        frame: WorldFrame.
        grid: optional precomputed warp_grid(cam_a, cam_sun, elev_a, frame).

    Returns:
        (H, W) torch raster, differentiable through both elevations.
    """
    if grid is None:
        grid = warp_grid(cam_a, cam_sun, elev_a, frame)
    return resample(elev_sun, grid) - elev_a


def darkening(dh, rho):
    """Shadow attenuation s = min(exp(-rho dh), 1), written with a relu so
    the clip and the exponential share one expression."""
    return torch.exp(-rho * torch.relu(dh))


def lighting(s, ambient):
    """Per-channel lighting l = s + (1 - s) psi, shape (3, H, W)."""
    s3 = s.unsqueeze(0)
    return s3 + (1.0 - s3) * ambient.reshape(3, 1, 1)


def form_image(feature, alpha, light, appearance):
    """Shaded image: lighting times the color-corrected albedo render.

    The color map is affine and compositing is linear in the albedos, so
    applying it to the composited raster (matrix times feature plus
    offset times accumulated opacity) equals applying it per primitive.
    """
    corrected = torch.einsum("ij,jhw->ihw", appearance.color_matrix, feature) \
        + appearance.color_offset.reshape(3, 1, 1) * alpha.unsqueeze(0)
    return light * corrected


def shade(targets_a, targets_sun, cam_a, cam_sun, frame, appearance, config):
    """Full shading path for one satellite view.

    Args:
        targets_a: RenderTargets of the satellite camera (feature,
            elevation, alpha all present).
        targets_sun: RenderTargets of the sun camera (elevation present).
        cam_a, cam_sun, frame: geometry.
        appearance: CameraAppearance of this image.
        config: ShadingConfig.

    Returns:
        (image (3, H, W), ShadowBuffers).
    """
    dh = delta_h(cam_a, cam_sun, targets_a.elevation, targets_sun.elevation, frame)
    s = darkening(dh, config.rho)
    light = lighting(s, appearance.ambient)
    image = form_image(targets_a.feature, targets_a.alpha, light, appearance)
    return image, ShadowBuffers(delta_h=dh, darkening=s, lighting=light)
