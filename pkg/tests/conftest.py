"""Shared scene factories for rasterizer tests."""

import numpy as np

from satsplat.geocam import AffineCamera, WorldFrame
from satsplat.splat import GaussianCloud


def random_splat_batch(rng, n, height, width, n_feat=4,
                       alpha_range=(0.05, 0.95), pad=4.0):
    """Raw kernel inputs for n random splats overlapping the raster.

    Covariances are random SPD 2x2 matrices a few pixels across; means may
    fall slightly outside the image so clamping paths get exercised.
    """
    means = np.stack([rng.uniform(-pad, width - 1 + pad, n),
                      rng.uniform(-pad, height - 1 + pad, n)], axis=1)
    b = rng.normal(size=(n, 2, 2)) * rng.uniform(0.7, 2.5, (n, 1, 1))
    cov = b @ b.transpose(0, 2, 1) + 0.3 * np.eye(2)
    det = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] ** 2
    conics = np.stack([cov[:, 1, 1] / det, -cov[:, 0, 1] / det,
                       cov[:, 0, 0] / det], axis=1)
    radii = 3.0 * np.sqrt(np.stack([cov[:, 0, 0], cov[:, 1, 1]], axis=1))
    alphas = rng.uniform(*alpha_range, n)
    feats = rng.uniform(0.0, 1.0, (n, n_feat))
    return means, conics, alphas, feats, radii


def nadir_camera(width=32, height=32):
    return AffineCamera(A=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], a=[0.0, 0.0],
                        width=width, height=height)


def simple_frame():
    return WorldFrame.from_bbox((0.0, 200.0), (0.0, 200.0), (0.0, 40.0), "31N")


def random_cloud(rng, n, z_range=(-0.5, 0.5), alpha_logit_range=(-2.0, 2.0),
                 log_scale_range=(-2.6, -1.8)):
    """A cloud of n primitives spread over the unit square in plan view."""
    positions = np.stack([rng.uniform(-0.8, 0.8, n), rng.uniform(-0.8, 0.8, n),
                          rng.uniform(*z_range, n)], axis=1)
    return GaussianCloud(positions=positions,
                         log_scales=rng.uniform(*log_scale_range, (n, 3)),
                         rotations=rng.normal(size=(n, 4)),
                         opacity_logits=rng.uniform(*alpha_logit_range, n),
                         albedos=rng.uniform(0.0, 1.0, (n, 3)))
