"""Differentiable Gaussian splatting for multi-date satellite imagery.

Reconstructs a 3D scene (colors and elevations) from a handful of
satellite images with known RPC camera models and sun positions, by
optimizing a cloud of 3D Gaussians rendered through per-image affine
camera approximations, with shadow-mapped shading and per-image
appearance compensation.
"""

__version__ = "0.1.0"
