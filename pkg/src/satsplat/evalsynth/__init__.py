"""Synthetic scenes, reference rendering, and DSM evaluation.

The scene model and the ray-cast oracle import eagerly; DSM extraction
and the dense surface fit are loaded on first use because they depend on
the splatting pipeline, and the oracle must stay importable without it
(a test pins that boundary).
"""

from .oracle import (OracleAppearance, OracleRender, oracle_render, sun_occluded,
                     visibility_counts)
from .scene import (Box, SceneBundle, SceneView, SyntheticScene, TrueCamera,
                    affine_from_rpc, generate_scene, rpc_from_true_camera)

_LAZY = {
    "DsmRaster": "dsm", "MaeResult": "dsm", "extract_dsm": "dsm", "mae": "dsm",
    "nadir_camera_for": "dsm", "true_dsm": "dsm", "cloud_from_scene": "fit",
}

__all__ = [
    "Box", "DsmRaster", "MaeResult", "OracleAppearance", "OracleRender",
    "SceneBundle", "SceneView", "SyntheticScene", "TrueCamera",
    "affine_from_rpc", "cloud_from_scene", "extract_dsm", "generate_scene",
    "mae", "nadir_camera_for", "oracle_render", "rpc_from_true_camera",
    "sun_occluded", "true_dsm", "visibility_counts",
]


def __getattr__(name):
    if name in _LAZY:
        import importlib
        module = importlib.import_module("." + _LAZY[name], __name__)
        return getattr(module, name)
    raise AttributeError("module %r has no attribute %r" % (__name__, name))
