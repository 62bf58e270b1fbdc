"""Sensor models and scene geometry: RPC cameras, UTM projection, the
scene-local world frame, affine camera fitting, and sun cameras."""

from .affine import (AffineCamera, FitStats, fit_affine, fit_affine_to_projector,
                     footprint_mask, homologous, localize, project,
                     view_direction)
from .frame import WorldFrame
from .rpc import RPCModel, fit_rpc
from .sun import SunDirection, build_sun_camera
from .utm import geodetic_to_utm, utm_to_geodetic, zone_from_lonlat

__all__ = [
    "AffineCamera", "FitStats", "fit_affine", "fit_affine_to_projector",
    "footprint_mask", "homologous", "localize", "project",
    "view_direction", "WorldFrame",
    "RPCModel", "fit_rpc", "SunDirection", "build_sun_camera",
    "geodetic_to_utm", "utm_to_geodetic", "zone_from_lonlat",
]
