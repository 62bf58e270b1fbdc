"""Differentiable rendering of a Gaussian cloud through an affine camera.

``render`` is the public entry point: it projects the cloud, sorts front
to back, and composites the requested channels (albedo, elevation, and
always the accumulated opacity) in one kernel pass.  The kernel is a
torch autograd function, so everything upstream of it (covariance
assembly, conic inversion, sigmoid opacities) stays on the autograd
graph and the kernel itself supplies analytic gradients.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from . import backend as backend_mod
from .project import conics_from_cov, project_cloud


@dataclass(frozen=True)
class RasterSettings:
    """Rasterizer knobs; the defaults follow standard splatting practice."""

    tile_size: int = 16
    dilation: float = 0.3          # px^2 added to both covariance eigenvalues
    sigma_max: float = 4.5         # Gaussian exponent at the 3-sigma window
    min_contrib: float = 1.0 / 255.0
    stop_transmittance: float = 1e-4
    deterministic: bool = True     # both backends are deterministic; reserved
    backend: str = "auto"


@dataclass
class RenderTargets:
    """Rasters produced by one render call; channels not requested are None."""

    feature: Optional[torch.Tensor]    # (3, H, W) composited albedo
    elevation: Optional[torch.Tensor]  # (H, W) composited altitude, meters
    alpha: torch.Tensor                # (H, W) accumulated opacity in [0, 1]


class _RasterizeFn(torch.autograd.Function):
    @staticmethod
    def forward(ctx, means_px, conics, alphas, feats, radii, height, width, settings):
        kern = backend_mod.load_backend(settings.backend)
        args = (np.ascontiguousarray(means_px.detach().numpy()),
                np.ascontiguousarray(conics.detach().numpy()),
                np.ascontiguousarray(alphas.detach().numpy()),
                np.ascontiguousarray(feats.detach().numpy()),
                radii, height, width,
                settings.sigma_max, settings.min_contrib,
                settings.stop_transmittance, settings.tile_size)
        out = kern.rasterize_forward(*args)
        ctx.kernel_args = args
        ctx.kern = kern
        ctx.out = out
        return torch.from_numpy(out)

    @staticmethod
    def backward(ctx, grad_out):
        grads = ctx.kern.rasterize_backward(
            *ctx.kernel_args, ctx.out,
            np.ascontiguousarray(grad_out.detach().numpy()))
        d_means, d_conics, d_alphas, d_feats = (torch.from_numpy(g) for g in grads)
        return d_means, d_conics, d_alphas, d_feats, None, None, None, None


def render(cloud, cam, frame, what="both", settings=RasterSettings()):
    """Rasterize a cloud into the camera's image plane.

    Args:
        cloud: GaussianCloud.
        cam: AffineCamera.
        frame: WorldFrame (supplies the altitude of each primitive).
        what: "feature", "elevation", or "both".
        settings: RasterSettings.

    Returns:
        RenderTargets with float64 tensors on the cloud's autograd graph.
    """
    if what not in ("feature", "elevation", "both"):
        raise ValueError("unknown render selection %r" % (what,))

    means_px, cov_px, depths = project_cloud(cloud, cam, settings.dilation)
    conics = conics_from_cov(cov_px)
    order = torch.argsort(depths, stable=True)

    channels = []
    if what in ("feature", "both"):
        channels.append(cloud.albedos)
    if what in ("elevation", "both"):
        elev = cloud.positions[:, 2] * frame.half_extent + frame.altitude_offset
        channels.append(elev.unsqueeze(-1))
    # Compositing a constant-1 channel accumulates the opacity raster with
    # the same suffix arithmetic as every other channel.
    channels.append(torch.ones((len(cloud), 1), dtype=torch.float64))
    feats = torch.cat(channels, dim=-1)

    # 3-sigma half-extents of each footprint; a hard visibility gate, so
    # not part of the autograd graph.
    radii = 3.0 * torch.sqrt(torch.stack([cov_px[:, 0, 0], cov_px[:, 1, 1]], -1))
    radii = np.ascontiguousarray(radii.detach().numpy())

    out = _RasterizeFn.apply(means_px[order], conics[order], cloud.opacities[order],
                             feats[order], radii[order.numpy()],
                             cam.height, cam.width, settings)

    pos = 0
    feature = None
    elevation = None
    if what in ("feature", "both"):
        feature = out[0:3]
        pos = 3
    if what in ("elevation", "both"):
        elevation = out[pos]
        pos += 1
    return RenderTargets(feature=feature, elevation=elevation, alpha=out[pos])
