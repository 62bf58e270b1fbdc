"""Compiled-vs-numpy backend agreement, tile binning correctness, and
backend selection plumbing."""

import numpy as np
import pytest

from conftest import random_splat_batch
from satsplat.splat.backend import backend_name, load_backend

compiled = pytest.importorskip("satsplat.splat._kernels",
                               reason="compiled kernels not built")
from satsplat.splat import _npkernels  # noqa: E402

KERNEL_TAIL = (4.5, 1.0 / 255.0, 1e-4, 16)


def both_forward(batch, height, width, tile_size=16):
    tail = (4.5, 1.0 / 255.0, 1e-4, tile_size)
    means, conics, alphas, feats, radii = batch
    args = (means, conics, alphas, feats, radii, height, width) + tail
    return compiled.rasterize_forward(*args), _npkernels.rasterize_forward(*args)


class TestForwardAgreement:
    @pytest.mark.parametrize("seed,n,h,w", [(0, 30, 32, 32), (1, 200, 64, 48),
                                            (2, 800, 96, 96), (3, 5, 17, 23)])
    def test_random_scenes(self, seed, n, h, w):
        rng = np.random.default_rng(seed)
        batch = random_splat_batch(rng, n, h, w)
        a, b = both_forward(batch, h, w)
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_opaque_and_offscreen(self):
        rng = np.random.default_rng(4)
        means, conics, alphas, feats, radii = random_splat_batch(rng, 60, 40, 40, pad=30.0)
        alphas[::7] = 1.0
        a, b = both_forward((means, conics, alphas, feats, radii), 40, 40)
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_odd_tile_size(self):
        rng = np.random.default_rng(5)
        batch = random_splat_batch(rng, 100, 50, 70)
        a, b = both_forward(batch, 50, 70, tile_size=13)
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_empty(self):
        batch = (np.zeros((0, 2)), np.zeros((0, 3)), np.zeros(0),
                 np.zeros((0, 4)), np.zeros((0, 2)))
        a, b = both_forward(batch, 8, 8)
        assert a.shape == b.shape == (4, 8, 8)
        assert not a.any() and not b.any()


class TestBackwardAgreement:
    @pytest.mark.parametrize("seed,n,h,w", [(10, 40, 32, 32), (11, 150, 48, 64)])
    def test_random_scenes(self, seed, n, h, w):
        rng = np.random.default_rng(seed)
        batch = random_splat_batch(rng, n, h, w)
        means, conics, alphas, feats, radii = batch
        args = (means, conics, alphas, feats, radii, h, w) + KERNEL_TAIL
        out_c = compiled.rasterize_forward(*args)
        out_n = _npkernels.rasterize_forward(*args)
        grad_out = rng.normal(size=out_c.shape)
        gc = compiled.rasterize_backward(*args, out_c, grad_out)
        gn = _npkernels.rasterize_backward(*args, out_n, grad_out)
        for a, b in zip(gc, gn):
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-11)


class TestTileBinning:
    def test_lists_match_bbox_overlap(self):
        rng = np.random.default_rng(20)
        h, w, tile = 48, 80, 16
        means, _, _, _, radii = random_splat_batch(rng, 120, h, w, pad=20.0)
        offsets, indices = compiled.bin_tiles(means, radii, h, w, tile)
        ntx = (w + tile - 1) // tile
        nty = (h + tile - 1) // tile
        assert len(offsets) == ntx * nty + 1

        for ty in range(nty):
            for tx in range(ntx):
                t = ty * ntx + tx
                listed = set(indices[offsets[t]:offsets[t + 1]].tolist())
                for k in range(len(means)):
                    x0 = max(int(np.ceil(means[k, 0] - radii[k, 0])), 0)
                    x1 = min(int(np.floor(means[k, 0] + radii[k, 0])), w - 1)
                    y0 = max(int(np.ceil(means[k, 1] - radii[k, 1])), 0)
                    y1 = min(int(np.floor(means[k, 1] + radii[k, 1])), h - 1)
                    overlaps = (x0 <= x1 and y0 <= y1
                                and x0 // tile <= tx <= x1 // tile
                                and y0 // tile <= ty <= y1 // tile)
                    assert (k in listed) == overlaps

    def test_order_preserved_within_tile(self):
        rng = np.random.default_rng(21)
        means, _, _, _, radii = random_splat_batch(rng, 300, 64, 64)
        offsets, indices = compiled.bin_tiles(means, radii, 64, 64, 16)
        for t in range(len(offsets) - 1):
            chunk = indices[offsets[t]:offsets[t + 1]]
            assert np.all(np.diff(chunk) > 0)


class TestSelection:
    def test_names(self):
        assert backend_name(load_backend("compiled")) == "compiled"
        assert backend_name(load_backend("numpy")) == "numpy"

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("SATSPLAT_BACKEND", "numpy")
        assert backend_name(load_backend("auto")) == "numpy"
        monkeypatch.setenv("SATSPLAT_BACKEND", "compiled")
        assert backend_name(load_backend("auto")) == "compiled"

    def test_bad_name(self):
        with pytest.raises(ValueError):
            load_backend("cuda")
