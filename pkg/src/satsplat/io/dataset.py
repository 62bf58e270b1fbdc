"""On-disk scene layout.

One directory per scene:

    scene.json             zone, UTM bbox, image GSD, optional seed
    images/<name>.png      8- or 16-bit, normalized to [0, 1] on load
    meta/<name>.json       RPC00B coefficients (or a precomputed affine
                           camera) plus sun_azimuth_deg/sun_elevation_deg
    gt/dsm.pfm + dsm.txt   optional lidar-style ground truth
    gt/mask_<tag>.png      optional binary evaluation masks

Loading fits an affine camera to each frame's RPC over the scene box and
logs the residuals; a residual above one pixel is suspicious enough to
warn about but not fatal, since the affine model is itself the product
being evaluated.
"""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from PIL import Image

from ..errors import DataError
from ..evalsynth.dsm import DsmRaster
from ..geocam import (AffineCamera, FitStats, RPCModel, SunDirection,
                      WorldFrame, fit_affine_to_projector)
from . import pfm

_SUN_KEYS = ("sun_azimuth_deg", "sun_elevation_deg")


@dataclass
class DatasetFrame:
    """One acquisition: image, camera, sun."""

    name: str
    image: np.ndarray                 # (3, H, W) float in [0, 1]
    camera: AffineCamera
    sun: SunDirection
    rpc: Optional[RPCModel] = None
    fit_stats: Optional[FitStats] = None


@dataclass
class SceneDataset:
    frames: List[DatasetFrame]
    world_frame: WorldFrame
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray
    gsd: float
    zone: str
    gt_dsm: Optional[DsmRaster] = None
    masks: Optional[Dict[str, np.ndarray]] = None

    def __len__(self):
        return len(self.frames)


def _image_to_unit(arr, path):
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype in (np.uint16, np.int32):
        return arr.astype(np.float64) / 65535.0
    raise DataError("%s: unsupported image dtype %s" % (path, arr.dtype))


def load_image(path):
    """Decode an image file to (3, H, W) float64 in [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img)
    scaled = _image_to_unit(arr, path)
    if scaled.ndim == 2:
        scaled = np.stack([scaled] * 3)
        return scaled
    if scaled.ndim == 3 and scaled.shape[2] >= 3:
        return np.moveaxis(scaled[:, :, :3], -1, 0)
    raise DataError("%s: unsupported image shape %s" % (path, arr.shape))


def save_image(path, image):
    """Write (3, H, W) floats in [0, 1] as an 8-bit PNG."""
    arr = np.moveaxis(np.asarray(image, dtype=float), 0, -1)
    quantized = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(quantized).save(path)


def write_dsm(path_base, dsm, zone):
    """Write a DsmRaster as <base>.pfm plus a <base>.txt georeference."""
    base = Path(path_base)
    pfm.write_pfm(base.with_suffix(".pfm"), dsm.values.astype(np.float32))
    with open(base.with_suffix(".txt"), "w") as f:
        f.write("gsd = %.10g\n" % dsm.gsd)
        f.write("origin_easting = %.10g\n" % dsm.origin[0])
        f.write("origin_northing = %.10g\n" % dsm.origin[1])
        f.write("zone = %s\n" % zone)
        f.write("nodata = nan\n")


def read_dsm(path_base):
    """Read a DSM written by `write_dsm`; returns (DsmRaster, zone)."""
    base = Path(path_base)
    values = pfm.read_pfm(base.with_suffix(".pfm")).astype(np.float64)
    fields = {}
    with open(base.with_suffix(".txt")) as f:
        for line in f:
            if "=" in line:
                key, _, val = line.partition("=")
                fields[key.strip()] = val.strip()
    try:
        dsm = DsmRaster(values=values, gsd=float(fields["gsd"]),
                        origin=(float(fields["origin_easting"]),
                                float(fields["origin_northing"])))
    except KeyError as missing:
        raise DataError("%s: DSM sidecar lacks %s" % (base, missing))
    return dsm, fields.get("zone", "")


def save_dataset(root, bundle, images, gt_dsm=None):
    """Write a synthetic bundle as a scene directory.

    Args:
        root: destination directory (created if needed).
        bundle: SceneBundle from `generate_scene`.
        images: {view name: (3, H, W) float image} to quantize and store.
        gt_dsm: optional DsmRaster ground truth.
    """
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "meta").mkdir(exist_ok=True)
    scene = bundle.scene
    with open(root / "scene.json", "w") as f:
        json.dump({"zone": scene.zone,
                   "bbox_lo": scene.bbox_lo.tolist(),
                   "bbox_hi": scene.bbox_hi.tolist(),
                   "gsd": bundle.gsd,
                   "seed": bundle.seed}, f, indent=2, sort_keys=True)
        f.write("\n")
    for view in bundle.views:
        save_image(root / "images" / (view.name + ".png"), images[view.name])
        meta = view.rpc.to_dict()
        meta["sun_azimuth_deg"] = view.sun.azimuth_deg
        meta["sun_elevation_deg"] = view.sun.elevation_deg
        with open(root / "meta" / (view.name + ".json"), "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
    if gt_dsm is not None:
        (root / "gt").mkdir(exist_ok=True)
        write_dsm(root / "gt" / "dsm", gt_dsm, scene.zone)


def load_dataset(root):
    """Read a scene directory into memory.

    Raises:
        DataError: missing layout pieces, metadata, or sun angles; the
            message names the offending frame.
    """
    root = Path(root)
    scene_path = root / "scene.json"
    if not scene_path.exists():
        raise DataError("%s: no scene.json" % root)
    with open(scene_path) as f:
        info = json.load(f)
    bbox_lo = np.asarray(info["bbox_lo"], dtype=float)
    bbox_hi = np.asarray(info["bbox_hi"], dtype=float)
    zone = str(info["zone"])
    world_frame = WorldFrame.from_bbox((bbox_lo[0], bbox_hi[0]),
                                       (bbox_lo[1], bbox_hi[1]),
                                       (bbox_lo[2], bbox_hi[2]), zone)

    image_paths = sorted((root / "images").glob("*.png")) \
        + sorted((root / "images").glob("*.tif"))
    if not image_paths:
        raise DataError("%s: no images" % root)

    frames = []
    for path in image_paths:
        name = path.stem
        meta_path = root / "meta" / (name + ".json")
        if not meta_path.exists():
            raise DataError("frame %s: missing metadata %s" % (name, meta_path))
        with open(meta_path) as f:
            meta = json.load(f)
        if any(k not in meta for k in _SUN_KEYS):
            raise DataError("frame %s: metadata lacks sun angles" % name)
        sun = SunDirection(azimuth_deg=float(meta["sun_azimuth_deg"]),
                           elevation_deg=float(meta["sun_elevation_deg"]))
        image = load_image(path)
        height, width = image.shape[1:]

        rpc = None
        stats = None
        if "affine" in meta:
            camera = AffineCamera.from_dict(meta["affine"])
        else:
            rpc = RPCModel.from_dict(meta)
            camera, stats = fit_affine_to_projector(
                rpc, world_frame, bbox_lo, bbox_hi, width, height,
                rng=np.random.default_rng(0))
            if stats.mean_px > 1.0:
                warnings.warn("frame %s: affine fit residual %.3f px"
                              % (name, stats.mean_px))
        frames.append(DatasetFrame(name=name, image=image, camera=camera,
                                   sun=sun, rpc=rpc, fit_stats=stats))

    gt_dsm = None
    if (root / "gt" / "dsm.pfm").exists():
        gt_dsm, _ = read_dsm(root / "gt" / "dsm")
    masks = {}
    for mask_path in sorted((root / "gt").glob("mask_*.png")) if (root / "gt").exists() else []:
        with Image.open(mask_path) as img:
            masks[mask_path.stem[len("mask_"):]] = np.asarray(img) > 0
    return SceneDataset(frames=frames, world_frame=world_frame,
                        bbox_lo=bbox_lo, bbox_hi=bbox_hi,
                        gsd=float(info["gsd"]), zone=zone,
                        gt_dsm=gt_dsm, masks=masks or None)
