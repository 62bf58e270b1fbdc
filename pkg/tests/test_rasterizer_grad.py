"""Backward pass tests: analytic kernel gradients against central finite
differences, through both the raw kernel interface and the full
differentiable render path, plus torch's own gradcheck on the autograd
binding.

Scenes keep opacities moderate and splats away from the cutoff contours:
the window, contribution and early-stop gates are intentional
discontinuities, and finite differences are only meaningful away from
them.
"""

import numpy as np
import pytest
import torch

from conftest import nadir_camera, simple_frame
from oracles import finite_difference_gradient
from satsplat.splat import GaussianCloud, RasterSettings, render
from satsplat.splat.backend import load_backend
from satsplat.splat.rasterizer import _RasterizeFn

KERNEL_TAIL = (4.5, 1.0 / 255.0, 1e-4, 16)


def fd_scene(rng, n=5, height=12, width=12):
    means = np.stack([rng.uniform(2.5, width - 3.5, n),
                      rng.uniform(2.5, height - 3.5, n)], axis=1)
    conics = np.stack([rng.uniform(0.15, 0.35, n), rng.uniform(-0.05, 0.05, n),
                       rng.uniform(0.15, 0.35, n)], axis=1)
    alphas = rng.uniform(0.25, 0.7, n)
    feats = rng.uniform(0.1, 0.9, (n, 3))
    radii = np.full((n, 2), 10.0)
    return means, conics, alphas, feats, radii


def relative_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return np.max(np.abs(analytic - numeric) / denom)


@pytest.mark.parametrize("backend_name", ["compiled", "numpy"])
class TestKernelFiniteDifferences:
    def test_all_inputs(self, backend_name):
        kern = load_backend(backend_name)
        rng = np.random.default_rng(42)
        means, conics, alphas, feats, radii = fd_scene(rng)
        h = w = 12
        weights = rng.normal(size=(3, h, w))

        def scalar(params):
            m, c, a, f = params
            out = kern.rasterize_forward(m, c, a, f, radii, h, w, *KERNEL_TAIL)
            return float(np.sum(weights * out))

        out = kern.rasterize_forward(means, conics, alphas, feats, radii,
                                     h, w, *KERNEL_TAIL)
        analytic = kern.rasterize_backward(means, conics, alphas, feats, radii,
                                           h, w, *KERNEL_TAIL, out, weights)
        numeric = finite_difference_gradient(scalar, [means, conics, alphas, feats],
                                             step=1e-4)
        for a, f in zip(analytic, numeric):
            assert relative_error(a, f) <= 1e-3

    def test_zero_upstream_gradient(self, backend_name):
        kern = load_backend(backend_name)
        rng = np.random.default_rng(1)
        means, conics, alphas, feats, radii = fd_scene(rng)
        out = kern.rasterize_forward(means, conics, alphas, feats, radii,
                                     12, 12, *KERNEL_TAIL)
        grads = kern.rasterize_backward(means, conics, alphas, feats, radii,
                                        12, 12, *KERNEL_TAIL, out,
                                        np.zeros_like(out))
        for g in grads:
            assert not g.any()

    def test_feature_gradient_is_compositing_weight(self, backend_name):
        # With one splat the weight at a pixel is alpha * G, and the
        # feature raster is linear in f with exactly that coefficient.
        kern = load_backend(backend_name)
        alpha = 0.37
        means = np.array([[5.0, 5.0]])
        conics = np.array([[0.25, 0.0, 0.25]])
        feats = np.array([[0.6, 0.2, 0.9]])
        radii = np.array([[8.0, 8.0]])
        args = (means, conics, np.array([alpha]), feats, radii, 11, 11) + KERNEL_TAIL
        out = kern.rasterize_forward(*args)
        grad_out = np.zeros_like(out)
        grad_out[1, 5, 5] = 1.0
        _, _, _, d_feats = kern.rasterize_backward(*args, out, grad_out)
        np.testing.assert_allclose(d_feats[0], [0.0, alpha, 0.0], atol=1e-14)
        grad_out = np.zeros_like(out)
        grad_out[1, 5, 7] = 1.0  # two pixels off-center: weight alpha*exp(-p)
        _, _, _, d_feats = kern.rasterize_backward(*args, out, grad_out)
        assert d_feats[0, 1] == pytest.approx(alpha * np.exp(-0.5 * 0.25 * 4.0))


class TestRenderFiniteDifferences:
    def test_all_parameter_groups(self):
        rng = np.random.default_rng(17)
        n = 5
        arrays = {
            "positions": np.stack([rng.uniform(-0.5, 0.5, n),
                                   rng.uniform(-0.5, 0.5, n),
                                   rng.uniform(-0.3, 0.3, n)], axis=1),
            "log_scales": rng.uniform(-2.4, -1.9, (n, 3)),
            "rotations": rng.normal(size=(n, 4)),
            "opacity_logits": rng.uniform(-1.0, 0.8, n),
            "albedos": rng.uniform(0.2, 0.8, (n, 3)),
        }
        cam = nadir_camera(16, 16)
        frame = simple_frame()
        w_feat = rng.normal(size=(3, 16, 16))
        w_elev = rng.normal(size=(16, 16)) * 0.01  # meters are big numbers
        w_alpha = rng.normal(size=(16, 16))

        def scalar_from(cloud):
            t = render(cloud, cam, frame, what="both")
            return (torch.as_tensor(w_feat) * t.feature).sum() \
                + (torch.as_tensor(w_elev) * t.elevation).sum() \
                + (torch.as_tensor(w_alpha) * t.alpha).sum()

        cloud = GaussianCloud(**arrays)
        loss = scalar_from(cloud)
        loss.backward()
        analytic = {name: p.grad.numpy().copy()
                    for name, p in zip(arrays, (cloud.positions, cloud.log_scales,
                                                cloud.rotations, cloud.opacity_logits,
                                                cloud.albedos))}

        for name in arrays:
            def scalar(params, _name=name):
                bumped = dict(arrays)
                bumped[_name] = params[0]
                with torch.no_grad():
                    return float(scalar_from(GaussianCloud(**bumped)))

            numeric = finite_difference_gradient(scalar, [arrays[name].copy()],
                                                 step=1e-4)[0]
            assert relative_error(analytic[name], numeric) <= 1e-3, name


class TestGradcheck:
    def test_autograd_binding(self):
        rng = np.random.default_rng(33)
        n, h, w = 3, 9, 9
        means = torch.tensor(np.stack([rng.uniform(2.0, 6.0, n),
                                       rng.uniform(2.0, 6.0, n)], 1),
                             requires_grad=True)
        conics = torch.tensor(np.stack([rng.uniform(0.2, 0.3, n),
                                        rng.uniform(-0.03, 0.03, n),
                                        rng.uniform(0.2, 0.3, n)], 1),
                              requires_grad=True)
        alphas = torch.tensor(rng.uniform(0.3, 0.6, n), requires_grad=True)
        feats = torch.tensor(rng.uniform(0.2, 0.8, (n, 2)), requires_grad=True)
        radii = np.full((n, 2), 8.0)
        settings = RasterSettings()

        def fn(m, c, a, f):
            return _RasterizeFn.apply(m, c, a, f, radii, h, w, settings)

        assert torch.autograd.gradcheck(fn, (means, conics, alphas, feats),
                                        eps=1e-6, atol=1e-7, rtol=1e-4)
