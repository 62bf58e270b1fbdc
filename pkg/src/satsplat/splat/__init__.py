"""Scene representation and the differentiable splatting rasterizer."""

from .primitives import (GaussianCloud, GaussianPrimitive, build_covariances,
                         covariance_world, quat_to_rotmat)
from .project import (Splat2D, conics_from_cov, project_cloud, sort_front_to_back,
                      splat_primitive)
from .rasterizer import RasterSettings, RenderTargets, render

__all__ = [
    "GaussianCloud", "GaussianPrimitive", "build_covariances", "covariance_world",
    "quat_to_rotmat", "Splat2D", "conics_from_cov", "project_cloud",
    "sort_front_to_back", "splat_primitive", "RasterSettings", "RenderTargets",
    "render",
]
