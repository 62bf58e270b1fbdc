# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tile-based alpha-compositing kernels.

Splats are binned into 16x16 pixel tiles by their 3-sigma bounding box,
then each pixel walks its tile's list front to back.  Per-pixel results
are identical to the numpy fallback in ``_npkernels``: the same window,
cutoff, and early-stop rules with the same accumulation order.  Both
passes are single-threaded and deterministic.

See ``_npkernels`` for the shared conventions and for the derivation of
the backward pass suffix arithmetic.
"""

from libc.math cimport ceil, exp, floor
from libc.stdlib cimport free, malloc

import numpy as np


cdef inline int imax(int a, int b) noexcept nogil:
    return a if a > b else b


cdef inline int imin(int a, int b) noexcept nogil:
    return a if a < b else b


def bin_tiles(double[:, ::1] means, double[:, ::1] radii,
              int height, int width, int tile_size):
    """CSR tile lists: (offsets (T+1,), indices) with splat order
    preserved inside every tile."""
    cdef int n_splats = means.shape[0]
    cdef int ntx = (width + tile_size - 1) // tile_size
    cdef int nty = (height + tile_size - 1) // tile_size
    counts_np = np.zeros(ntx * nty + 1, dtype=np.int64)
    cdef long long[::1] counts = counts_np
    cdef int k, x0, x1, y0, y1, tx, ty

    for k in range(n_splats):
        x0 = imax(<int>ceil(means[k, 0] - radii[k, 0]), 0)
        x1 = imin(<int>floor(means[k, 0] + radii[k, 0]), width - 1)
        y0 = imax(<int>ceil(means[k, 1] - radii[k, 1]), 0)
        y1 = imin(<int>floor(means[k, 1] + radii[k, 1]), height - 1)
        if x0 > x1 or y0 > y1:
            continue
        for ty in range(y0 // tile_size, y1 // tile_size + 1):
            for tx in range(x0 // tile_size, x1 // tile_size + 1):
                counts[ty * ntx + tx + 1] += 1

    offsets_np = np.cumsum(counts_np)
    indices_np = np.empty(offsets_np[ntx * nty], dtype=np.int64)
    cursor_np = offsets_np[:-1].copy()
    cdef long long[::1] offsets = offsets_np
    cdef long long[::1] indices = indices_np
    cdef long long[::1] cursor = cursor_np

    for k in range(n_splats):
        x0 = imax(<int>ceil(means[k, 0] - radii[k, 0]), 0)
        x1 = imin(<int>floor(means[k, 0] + radii[k, 0]), width - 1)
        y0 = imax(<int>ceil(means[k, 1] - radii[k, 1]), 0)
        y1 = imin(<int>floor(means[k, 1] + radii[k, 1]), height - 1)
        if x0 > x1 or y0 > y1:
            continue
        for ty in range(y0 // tile_size, y1 // tile_size + 1):
            for tx in range(x0 // tile_size, x1 // tile_size + 1):
                indices[cursor[ty * ntx + tx]] = k
                cursor[ty * ntx + tx] += 1
    return offsets_np, indices_np


def rasterize_forward(double[:, ::1] means, double[:, ::1] conics,
                      double[::1] alphas, double[:, ::1] feats,
                      double[:, ::1] radii, int height, int width,
                      double sigma_max, double min_contrib,
                      double stop_transmittance, int tile_size):
    cdef int n_feat = feats.shape[1]
    out_np = np.zeros((n_feat, height, width))
    cdef double[:, :, ::1] out = out_np

    offsets_np, indices_np = bin_tiles(means, radii, height, width, tile_size)
    cdef long long[::1] offsets = offsets_np
    cdef long long[::1] indices = indices_np
    cdef int ntx = (width + tile_size - 1) // tile_size
    cdef int nty = (height + tile_size - 1) // tile_size

    cdef int tx, ty, px, py, c, k, tile
    cdef long long ii
    cdef double dx, dy, p, g, w, trans

    with nogil:
        for ty in range(nty):
            for tx in range(ntx):
                tile = ty * ntx + tx
                if offsets[tile] == offsets[tile + 1]:
                    continue
                for py in range(ty * tile_size, imin((ty + 1) * tile_size, height)):
                    for px in range(tx * tile_size, imin((tx + 1) * tile_size, width)):
                        trans = 1.0
                        for ii in range(offsets[tile], offsets[tile + 1]):
                            k = <int>indices[ii]
                            dx = px - means[k, 0]
                            dy = py - means[k, 1]
                            p = 0.5 * (conics[k, 0] * dx * dx
                                       + conics[k, 2] * dy * dy) \
                                + conics[k, 1] * dx * dy
                            if p > sigma_max:
                                continue
                            g = alphas[k] * exp(-p)
                            if g < min_contrib:
                                continue
                            w = g * trans
                            for c in range(n_feat):
                                out[c, py, px] += feats[k, c] * w
                            trans *= 1.0 - g
                            if trans < stop_transmittance:
                                break
    return out_np


def rasterize_backward(double[:, ::1] means, double[:, ::1] conics,
                       double[::1] alphas, double[:, ::1] feats,
                       double[:, ::1] radii, int height, int width,
                       double sigma_max, double min_contrib,
                       double stop_transmittance, int tile_size,
                       double[:, :, ::1] out, double[:, :, ::1] grad_out):
    cdef int n_feat = feats.shape[1]
    d_means_np = np.zeros((means.shape[0], 2))
    d_conics_np = np.zeros((conics.shape[0], 3))
    d_alphas_np = np.zeros(alphas.shape[0])
    d_feats_np = np.zeros((feats.shape[0], n_feat))
    cdef double[:, ::1] d_means = d_means_np
    cdef double[:, ::1] d_conics = d_conics_np
    cdef double[::1] d_alphas = d_alphas_np
    cdef double[:, ::1] d_feats = d_feats_np

    offsets_np, indices_np = bin_tiles(means, radii, height, width, tile_size)
    cdef long long[::1] offsets = offsets_np
    cdef long long[::1] indices = indices_np
    cdef int ntx = (width + tile_size - 1) // tile_size
    cdef int nty = (height + tile_size - 1) // tile_size

    cdef int tx, ty, px, py, c, k, tile
    cdef long long ii
    cdef double dx, dy, p, gauss, g, w, trans, onem, denom, dg, dp, sfx
    cdef double *prefix = <double *>malloc(n_feat * sizeof(double))
    if prefix == NULL:
        raise MemoryError()

    try:
        with nogil:
            for ty in range(nty):
                for tx in range(ntx):
                    tile = ty * ntx + tx
                    if offsets[tile] == offsets[tile + 1]:
                        continue
                    for py in range(ty * tile_size, imin((ty + 1) * tile_size, height)):
                        for px in range(tx * tile_size, imin((tx + 1) * tile_size, width)):
                            trans = 1.0
                            for c in range(n_feat):
                                prefix[c] = 0.0
                            for ii in range(offsets[tile], offsets[tile + 1]):
                                k = <int>indices[ii]
                                dx = px - means[k, 0]
                                dy = py - means[k, 1]
                                p = 0.5 * (conics[k, 0] * dx * dx
                                           + conics[k, 2] * dy * dy) \
                                    + conics[k, 1] * dx * dy
                                if p > sigma_max:
                                    continue
                                gauss = exp(-p)
                                g = alphas[k] * gauss
                                if g < min_contrib:
                                    continue
                                w = g * trans
                                onem = 1.0 - g
                                denom = onem if onem > 1e-12 else 1e-12
                                dg = 0.0
                                for c in range(n_feat):
                                    d_feats[k, c] += grad_out[c, py, px] * w
                                    prefix[c] += feats[k, c] * w
                                    sfx = out[c, py, px] - prefix[c]
                                    dg += grad_out[c, py, px] * (feats[k, c] * trans
                                                                 - sfx / denom)
                                d_alphas[k] += dg * gauss
                                dp = -dg * g
                                d_conics[k, 0] += dp * 0.5 * dx * dx
                                d_conics[k, 1] += dp * dx * dy
                                d_conics[k, 2] += dp * 0.5 * dy * dy
                                d_means[k, 0] -= dp * (conics[k, 0] * dx + conics[k, 1] * dy)
                                d_means[k, 1] -= dp * (conics[k, 1] * dx + conics[k, 2] * dy)
                                trans *= onem
                                if trans < stop_transmittance:
                                    break
    finally:
        free(prefix)
    return d_means_np, d_conics_np, d_alphas_np, d_feats_np
