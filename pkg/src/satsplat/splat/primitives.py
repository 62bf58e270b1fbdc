"""Gaussian primitive parametrization.

Each primitive is an anisotropic 3D Gaussian with an opacity and an
albedo.  The covariance is never stored directly: it is rebuilt as
R diag(exp(2 s)) R^T from log-scales s and a quaternion, which keeps it
symmetric positive definite under unconstrained optimization, and opacity
lives in logit space for the same reason.  Albedos are plain values in
[0, 1], clamped after each optimizer step rather than squashed, so a
fully saturated color is reachable exactly.
"""

from dataclasses import dataclass

import numpy as np
import torch


def quat_to_rotmat(q):
    """Rotation matrices from (..., 4) quaternions in (w, x, y, z) order.

    Quaternions are normalized here, so callers may hand in raw parameters.
    """
    q = q / q.norm(dim=-1, keepdim=True)
    w, x, y, z = q.unbind(-1)
    return torch.stack([
        torch.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        torch.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        torch.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], -2)


def build_covariances(log_scales, rotations):
    """(..., 3, 3) covariances R diag(exp(2s)) R^T."""
    R = quat_to_rotmat(rotations)
    S2 = torch.exp(2.0 * log_scales)
    return R @ (S2.unsqueeze(-1) * R.transpose(-1, -2))


class GaussianCloud:
    """The trainable scene: K primitives as flat parameter tensors.

    All tensors are float64; the CPU rasterizer works in doubles and
    finite-difference checks stay sharp that way.
    """

    def __init__(self, positions, log_scales, rotations, opacity_logits, albedos):
        def param(v):
            t = torch.as_tensor(v, dtype=torch.float64).clone()
            t.requires_grad_(True)
            return t

        self.positions = param(positions)          # (K, 3) world units
        self.log_scales = param(log_scales)        # (K, 3)
        self.rotations = param(rotations)          # (K, 4) wxyz
        self.opacity_logits = param(opacity_logits)  # (K,)
        self.albedos = param(albedos)              # (K, 3) in [0, 1]
        if self.positions.shape[0] != self.albedos.shape[0]:
            raise ValueError("primitive field lengths disagree")

    def __len__(self):
        return self.positions.shape[0]

    @property
    def opacities(self):
        return torch.sigmoid(self.opacity_logits)

    @property
    def scales(self):
        return torch.exp(self.log_scales)

    @property
    def covariances(self):
        return build_covariances(self.log_scales, self.rotations)

    def parameter_groups(self):
        """Named parameter tensors, the unit the optimizer works on."""
        return {
            "position": self.positions,
            "scale": self.log_scales,
            "rotation": self.rotations,
            "opacity": self.opacity_logits,
            "albedo": self.albedos,
        }

    def clamp_albedos_(self):
        with torch.no_grad():
            self.albedos.clamp_(0.0, 1.0)

    def normalize_rotations_(self):
        with torch.no_grad():
            self.rotations /= self.rotations.norm(dim=-1, keepdim=True)


@dataclass
class GaussianPrimitive:
    """A single primitive as plain arrays, for the scalar geometry API."""

    position: np.ndarray       # (3,) world units
    log_scales: np.ndarray     # (3,)
    rotation: np.ndarray       # (4,) wxyz
    opacity_logit: float
    albedo: np.ndarray         # (3,)


def covariance_world(prim):
    """3x3 world covariance of a single primitive."""
    cov = build_covariances(torch.as_tensor(prim.log_scales, dtype=torch.float64),
                            torch.as_tensor(prim.rotation, dtype=torch.float64))
    return cov.numpy()
