"""Training objective: photometric term plus geometric regularizers.

The photometric term blends mean absolute difference with structural
similarity.  Three regularizers keep the reconstruction honest where
photometry alone is ambiguous: a sparsity penalty on opacities, a
consistency penalty that compares renders from a camera and a randomly
perturbed copy of it through the homologous warp, and an opaqueness
penalty that pushes shadow attenuation away from half-lit ambiguity.

Consistency reuses the shadow machinery with the perturbed camera in the
role of the sun, so its mask lives here next to the weighting logic.
"""

import numpy as np
import torch
import torch.nn.functional as F
from dataclasses import dataclass

from . import shading
from .geocam import AffineCamera

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_ENTROPY_EPS = 1e-6


@dataclass(frozen=True)
class LossWeights:
    opaqueness: float = 0.1
    color_consistency: float = 0.1
    altitude_consistency: float = 0.01
    sparsity: float = 0.01


@dataclass(frozen=True)
class ConsistencyConfig:
    """Camera perturbation scale (NDC shift per meter of altitude) and the
    height-gap threshold in meters below which a pixel counts as seen by
    both cameras.  With normalize set, the consistency and opaqueness
    sums become per-pixel means."""

    perturb_scale: float = 0.05
    delta_h_min: float = 0.30
    normalize: bool = True


@dataclass
class LossTerms:
    photometric: torch.Tensor
    opaqueness: torch.Tensor
    color_consistency: torch.Tensor
    altitude_consistency: torch.Tensor
    sparsity: torch.Tensor

    def detached(self):
        return {k: float(v.detach()) for k, v in vars(self).items()}


def _gaussian_window(n, sigma):
    x = torch.arange(n, dtype=torch.float64) - (n - 1) / 2.0
    g = torch.exp(-(x ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _ssim_map(a, b, window=_SSIM_WINDOW, sigma=_SSIM_SIGMA):
    """Per-window structural similarity between two (C, H, W) images.

    Separable Gaussian window, stabilizer constants for unit dynamic
    range.  Only complete windows are produced: padding would dilute
    border statistics with zeros and break the formula on flat images.
    """
    c = a.shape[0]
    g = _gaussian_window(window, sigma)
    kernel = (g[:, None] * g[None, :]).expand(c, 1, window, window)

    def blur(img):
        return F.conv2d(img.unsqueeze(0), kernel, groups=c)[0]

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a ** 2
    var_b = blur(b * b) - mu_b ** 2
    cov = blur(a * b) - mu_a * mu_b
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, window=_SSIM_WINDOW, sigma=_SSIM_SIGMA):
    """Mean structural similarity over the complete windows."""
    return _ssim_map(a, b, window, sigma).mean()


def photometric(rendered, observed, ssim_weight=0.2, mask=None):
    """(1 - w) L1 + w (1 - SSIM) / 2 between (C, H, W) images.

    ``mask`` is an optional (H, W) zero/one raster limiting both terms to
    the covered pixels; SSIM windows count when their center is covered.
    """
    if mask is None:
        l1 = (rendered - observed).abs().mean()
        s = ssim(rendered, observed)
    else:
        n = mask.sum().clamp_min(1.0)
        l1 = ((rendered - observed).abs().mean(dim=0) * mask).sum() / n
        lobe = _SSIM_WINDOW // 2
        core = mask[lobe:-lobe, lobe:-lobe]
        m = core.sum().clamp_min(1.0)
        s = (_ssim_map(rendered, observed).mean(dim=0) * core).sum() / m
    return (1.0 - ssim_weight) * l1 + ssim_weight * (1.0 - s) / 2.0


def sparsity(opacities):
    """Mean opacity of the live primitives."""
    return opacities.mean()


def opaqueness(s, normalize=False, mask=None):
    """Binary entropy of the shadow attenuation, in bits.

    Zero where the scene is decisively lit or shadowed, maximal (one bit
    per pixel) where s = 1/2; minimizing it sharpens shadow boundaries.
    Summed over pixels, or averaged with normalize; ``mask`` restricts
    either reduction to the covered pixels.
    """
    p = s.clamp(_ENTROPY_EPS, 1.0 - _ENTROPY_EPS)
    h = -(p * torch.log2(p) + (1 - p) * torch.log2(1 - p))
    if mask is not None:
        total = (h * mask).sum()
        return total / mask.sum().clamp_min(1.0) if normalize else total
    return h.mean() if normalize else h.sum()


def perturb_camera(cam, frame, scale, rng):
    """Random nearby camera: the projection gains a shear proportional to
    altitude plus the matching constant shift, which tilts the viewing
    direction without moving the image of the scene center much.

    The two shift components are standard normal draws rejected outside
    [-1, 1].
    """
    q = np.empty(2)
    for i in range(2):
        while True:
            v = rng.standard_normal()
            if -1.0 <= v <= 1.0:
                q[i] = v
                break
    a_mat = cam.A + scale * np.outer(q, frame.altitude_gradient)
    offset = cam.a + scale * frame.altitude_offset * q
    return AffineCamera(A=a_mat, a=offset, width=cam.width,
                        height=cam.height, label=cam.label + "-perturbed")


def consistency_mask(dh, grid, delta_h_min):
    """Pixels of camera A whose surface point camera B also sees.

    A pixel survives when the height gap toward B stays below the
    threshold and the homologous point lands inside B's frame.  Detached
    float raster of zeros and ones; the comparison is one-sided because a
    gap can only grow positive when B's view is blocked from above.
    """
    with torch.no_grad():
        inside = ((grid[0, ..., 0].abs() <= 1.0)
                  & (grid[0, ..., 1].abs() <= 1.0))
        return ((dh < delta_h_min) & inside).to(dh.dtype)


def masked_difference(raster_a, raster_b, grid, mask, normalize=False):
    """Sum over masked pixels of the absolute difference between camera
    A's raster and camera B's raster pulled through the homologous warp.

    Rasters are (H, W) or (C, H, W); channel differences are summed.
    With normalize the sum becomes a per-masked-pixel mean (zero when the
    mask is empty).
    """
    warped = shading.resample(raster_b, grid)
    diff = (raster_a - warped).abs()
    if diff.dim() == 3:
        diff = diff.sum(dim=0)
    total = (mask * diff).sum()
    if not normalize:
        return total
    n = mask.sum()
    return total / n if n > 0 else total


def total_loss(terms, weights, regularize=True):
    """Weighted objective; the regularizers only enter once the warmup
    phase hands over."""
    out = terms.photometric
    if regularize:
        out = (out
               + weights.opaqueness * terms.opaqueness
               + weights.color_consistency * terms.color_consistency
               + weights.altitude_consistency * terms.altitude_consistency
               + weights.sparsity * terms.sparsity)
    return out
