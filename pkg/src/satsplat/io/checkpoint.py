"""Model checkpoints: a flat binary primitive table plus a JSON sidecar.

The binary file is a little-endian uint64 primitive count followed by one
14-float32 record per primitive: position (3), log scales (3), rotation
quaternion wxyz (4), opacity logit (1), albedo rgb (3).  The sidecar
(same path plus ".json") carries the world frame, per-view appearance
parameters, and any run metadata, so a checkpoint is meaningful on its
own without the training directory.
"""

import json

import numpy as np

from ..errors import DataError
from ..geocam import WorldFrame
from ..shading import CameraAppearance
from ..splat import GaussianCloud

_RECORD_FLOATS = 14


def sidecar_path(path):
    return str(path) + ".json"


def save_checkpoint(path, cloud, frame, appearances=None, metadata=None):
    """Write a cloud and its context.

    Args:
        path: binary file destination; the sidecar lands next to it.
        cloud: GaussianCloud.
        frame: WorldFrame.
        appearances: optional {view name: CameraAppearance}.
        metadata: optional JSON-serializable dict merged into the sidecar.
    """
    fields = np.concatenate([
        cloud.positions.detach().numpy(),
        cloud.log_scales.detach().numpy(),
        cloud.rotations.detach().numpy(),
        cloud.opacity_logits.detach().numpy()[:, None],
        cloud.albedos.detach().numpy(),
    ], axis=1).astype("<f4")
    with open(path, "wb") as f:
        f.write(np.uint64(len(cloud)).tobytes())
        f.write(np.ascontiguousarray(fields).tobytes())

    sidecar = {"frame": frame.to_dict(), "count": len(cloud)}
    if appearances:
        sidecar["appearances"] = {name: app.state_dict()
                                  for name, app in appearances.items()}
    if metadata:
        sidecar.update(metadata)
    with open(sidecar_path(path), "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_checkpoint(path):
    """Read a checkpoint back.

    Returns:
        (GaussianCloud, WorldFrame, {view name: CameraAppearance}, metadata
        dict with the remaining sidecar keys).
    """
    with open(path, "rb") as f:
        raw_count = f.read(8)
        if len(raw_count) != 8:
            raise DataError("%s: missing checkpoint header" % path)
        count = int(np.frombuffer(raw_count, dtype="<u8")[0])
        payload = np.frombuffer(f.read(), dtype="<f4")
    if payload.size != count * _RECORD_FLOATS:
        raise DataError("%s: expected %d primitives, payload holds %d floats"
                        % (path, count, payload.size))
    fields = payload.reshape(count, _RECORD_FLOATS).astype(np.float64)
    cloud = GaussianCloud(positions=fields[:, 0:3], log_scales=fields[:, 3:6],
                          rotations=fields[:, 6:10], opacity_logits=fields[:, 10],
                          albedos=fields[:, 11:14])

    try:
        with open(sidecar_path(path)) as f:
            sidecar = json.load(f)
    except FileNotFoundError:
        raise DataError("%s: checkpoint sidecar is missing" % sidecar_path(path))
    frame = WorldFrame.from_dict(sidecar.pop("frame"))
    appearances = {name: CameraAppearance.from_state_dict(d)
                   for name, d in sidecar.pop("appearances", {}).items()}
    return cloud, frame, appearances, sidecar
