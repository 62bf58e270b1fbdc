"""Pure-numpy alpha-compositing kernels, the fallback rasterizer backend.

Vectorized per splat over its screen bounding box, walking splats in the
given (front-to-back) order while tracking per-pixel transmittance.  The
math must stay in lockstep with the compiled kernels in ``_kernels.pyx``:
the two are tested for near-bitwise agreement.

Conventions shared by both backends:
  - a splat touches a pixel only if the Gaussian exponent p <= sigma_max
    (the 3-sigma window) and its contribution alpha*exp(-p) >= min_contrib;
  - a pixel stops compositing once transmittance drops below
    stop_transmittance; the splat that crossed the threshold is kept;
  - the backward pass replays the forward walk in the same order, so the
    suffix sums it needs cancel exactly and no per-pixel state is stored.
"""

import numpy as np


def _bbox(mx, my, rx, ry, width, height):
    x0 = max(int(np.ceil(mx - rx)), 0)
    x1 = min(int(np.floor(mx + rx)), width - 1)
    y0 = max(int(np.ceil(my - ry)), 0)
    y1 = min(int(np.floor(my + ry)), height - 1)
    return x0, x1, y0, y1


def rasterize_forward(means, conics, alphas, feats, radii, height, width,
                      sigma_max, min_contrib, stop_transmittance, tile_size):
    """Composite K splats into a (C, H, W) raster.  ``tile_size`` is
    accepted for signature parity with the compiled backend and ignored."""
    n_feat = feats.shape[1]
    out = np.zeros((n_feat, height, width))
    trans = np.ones((height, width))
    stopped = np.zeros((height, width), dtype=bool)

    for k in range(len(means)):
        x0, x1, y0, y1 = _bbox(means[k, 0], means[k, 1], radii[k, 0], radii[k, 1],
                               width, height)
        if x0 > x1 or y0 > y1:
            continue
        sl = np.s_[y0:y1 + 1, x0:x1 + 1]
        dx = np.arange(x0, x1 + 1) - means[k, 0]
        dy = (np.arange(y0, y1 + 1) - means[k, 1])[:, None]
        c00, c01, c11 = conics[k]
        p = 0.5 * (c00 * dx * dx + c11 * dy * dy) + c01 * dx * dy
        g = alphas[k] * np.exp(-p)
        live = (p <= sigma_max) & (g >= min_contrib) & ~stopped[sl]
        if not live.any():
            continue
        t_here = trans[sl]
        w = np.where(live, g * t_here, 0.0)
        out[(slice(None),) + sl] += feats[k][:, None, None] * w
        t_new = np.where(live, t_here * (1.0 - g), t_here)
        trans[sl] = t_new
        stopped[sl] |= live & (t_new < stop_transmittance)
    return out


def rasterize_backward(means, conics, alphas, feats, radii, height, width,
                       sigma_max, min_contrib, stop_transmittance, tile_size,
                       out, grad_out):
    """Gradients of ``rasterize_forward`` with respect to every input.

    Replays the forward walk; at each contributing splat the suffix sum
    (what later splats add to each pixel) is the stashed forward output
    minus the running prefix, and the division by (1 - g) it needs is
    safe: any composited splat that is not a pixel's last has
    1 - g >= stop_transmittance, and the last one has an exactly zero
    suffix.
    """
    n_feat = feats.shape[1]
    d_means = np.zeros_like(means)
    d_conics = np.zeros_like(conics)
    d_alphas = np.zeros_like(alphas)
    d_feats = np.zeros_like(feats)

    trans = np.ones((height, width))
    stopped = np.zeros((height, width), dtype=bool)
    prefix = np.zeros_like(out)

    for k in range(len(means)):
        x0, x1, y0, y1 = _bbox(means[k, 0], means[k, 1], radii[k, 0], radii[k, 1],
                               width, height)
        if x0 > x1 or y0 > y1:
            continue
        sl = np.s_[y0:y1 + 1, x0:x1 + 1]
        dx = np.arange(x0, x1 + 1) - means[k, 0]
        dy = (np.arange(y0, y1 + 1) - means[k, 1])[:, None]
        c00, c01, c11 = conics[k]
        p = 0.5 * (c00 * dx * dx + c11 * dy * dy) + c01 * dx * dy
        gauss = np.exp(-p)
        g = alphas[k] * gauss
        live = (p <= sigma_max) & (g >= min_contrib) & ~stopped[sl]
        if not live.any():
            continue
        t_here = trans[sl]
        w = np.where(live, g * t_here, 0.0)
        go = grad_out[(slice(None),) + sl]

        d_feats[k] = np.einsum("chw,hw->c", go, w)

        prefix[(slice(None),) + sl] += feats[k][:, None, None] * w
        suffix = out[(slice(None),) + sl] - prefix[(slice(None),) + sl]
        denom = np.maximum(1.0 - g, 1e-12)
        dg = np.einsum("chw,chw->hw", go,
                       feats[k][:, None, None] * t_here - suffix / denom)
        dg = np.where(live, dg, 0.0)

        d_alphas[k] = np.sum(dg * gauss)
        dp = -dg * g
        d_conics[k, 0] = np.sum(dp * 0.5 * dx * dx)
        d_conics[k, 1] = np.sum(dp * dx * dy)
        d_conics[k, 2] = np.sum(dp * 0.5 * dy * dy)
        d_means[k, 0] = np.sum(-dp * (c00 * dx + c01 * dy))
        d_means[k, 1] = np.sum(-dp * (c01 * dx + c11 * dy))

        t_new = np.where(live, t_here * (1.0 - g), t_here)
        trans[sl] = t_new
        stopped[sl] |= live & (t_new < stop_transmittance)
    return d_means, d_conics, d_alphas, d_feats
