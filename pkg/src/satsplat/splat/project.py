"""Projection of 3D Gaussians into a camera's pixel plane.

Under an affine camera the pushforward of a Gaussian is exact: the 2D
mean is the projected mean and the 2D covariance is A Sigma A^T, no
Jacobian linearization involved.  Screen-space work happens in pixel
units (NDC is rescaled by width/2 and height/2), where the constant
0.3 px^2 dilation is added to keep every splat at least a pixel wide.
"""

from dataclasses import dataclass

import numpy as np
import torch

from ..geocam import view_direction
from ..interp import ndc_to_pixel
from .primitives import covariance_world


@dataclass
class Splat2D:
    """A projected primitive: pixel-plane footprint plus sort depth."""

    mean_ndc: np.ndarray    # (2,)
    cov_px: np.ndarray      # (2, 2), includes dilation
    depth: float            # world units along the view direction
    alpha: float
    index: int

    def mean_px(self, width, height):
        return np.array([ndc_to_pixel(self.mean_ndc[0], width),
                         ndc_to_pixel(self.mean_ndc[1], height)])


def pixel_scaled_rows(cam):
    """Camera rows rescaled so they map world units to pixels."""
    A = np.asarray(cam.A, dtype=float)
    return A * np.array([[cam.width / 2.0], [cam.height / 2.0]])


def splat_primitive(cam, prim, dilation=0.3):
    """Project one primitive; the batched path is project_cloud."""
    mu = np.asarray(prim.position, dtype=float)
    mean_ndc = np.asarray(cam.A, dtype=float) @ mu + np.asarray(cam.a, dtype=float)
    A_px = pixel_scaled_rows(cam)
    cov_px = A_px @ covariance_world(prim) @ A_px.T + dilation * np.eye(2)
    depth = float(mu @ view_direction(cam))
    alpha = float(1.0 / (1.0 + np.exp(-prim.opacity_logit)))
    return Splat2D(mean_ndc=mean_ndc, cov_px=cov_px, depth=depth,
                   alpha=alpha, index=0)


def sort_front_to_back(depths):
    """Permutation ordering splats by increasing depth, ties by index."""
    return np.argsort(np.asarray(depths), kind="stable")


def project_cloud(cloud, cam, dilation=0.3):
    """Project every primitive of a cloud, differentiably.

    Returns (means_px (K,2), cov_px (K,2,2), depths (K,)) as torch
    tensors on the cloud's graph.  Depth increases away from the camera,
    so an ascending stable sort gives front-to-back order.
    """
    A = torch.as_tensor(np.asarray(cam.A), dtype=torch.float64)
    a = torch.as_tensor(np.asarray(cam.a), dtype=torch.float64)
    mean_ndc = cloud.positions @ A.T + a
    means_px = (mean_ndc + 1.0) * torch.tensor([cam.width / 2.0, cam.height / 2.0]) - 0.5

    A_px = torch.as_tensor(pixel_scaled_rows(cam))
    cov = cloud.covariances
    cov_px = A_px @ cov @ A_px.T + dilation * torch.eye(2, dtype=torch.float64)

    d = torch.as_tensor(view_direction(cam))
    depths = cloud.positions.detach() @ d
    return means_px, cov_px, depths


def conics_from_cov(cov_px):
    """(K, 3) inverse-covariance entries (c00, c01, c11) from (K, 2, 2).

    The dilation bounds both eigenvalues away from zero, so the
    determinant is safely positive.
    """
    det = cov_px[:, 0, 0] * cov_px[:, 1, 1] - cov_px[:, 0, 1] * cov_px[:, 1, 0]
    return torch.stack([cov_px[:, 1, 1] / det,
                        -cov_px[:, 0, 1] / det,
                        cov_px[:, 0, 0] / det], dim=-1)
