"""Frozen primitive clouds built from known geometry.

For shadow-fidelity checks the splatting pipeline must be fed geometry
that is right by construction: every surface of the scene (ground, box
tops, box walls) is tiled with small opaque pancakes, one per grid cell,
oriented along the surface.  No optimization is involved.
"""

import numpy as np

from ..splat import GaussianCloud

# Quaternions (w, x, y, z) rotating the local thin axis (z) onto each
# face normal: +-e need a 90 degree turn about north, +-n about east.
_SQ2 = np.sqrt(0.5)
_FACE_QUATS = {
    "z": (1.0, 0.0, 0.0, 0.0),
    "e": (_SQ2, 0.0, _SQ2, 0.0),
    "n": (_SQ2, _SQ2, 0.0, 0.0),
}

_OPAQUE_LOGIT = 7.0   # sigmoid(7) ~ 0.999


def _patch(frame, centers_utm, normal_axis, sigma_m, albedos):
    """Primitive rows for one planar surface patch."""
    n = centers_utm.shape[0]
    positions = frame.world_from_utm(centers_utm)
    sigma_w = sigma_m / frame.half_extent
    log_scales = np.full((n, 3), np.log(sigma_w))
    log_scales[:, 2] = np.log(sigma_w * 0.02)   # thin along the normal
    rotations = np.tile(_FACE_QUATS[normal_axis], (n, 1))
    return positions, log_scales, rotations, albedos


def cloud_from_scene(scene, spacing=1.0):
    """Dense surface tiling of a synthetic scene.

    Args:
        scene: SyntheticScene.
        spacing: grid pitch in meters between pancake centers.

    Returns:
        GaussianCloud of near-opaque primitives lying on the true
        surfaces, with the oracle's albedos.
    """
    frame = scene.world_frame()
    sigma = 0.7 * spacing
    chunks = []

    def grid(lo, hi):
        n = max(int(np.ceil((hi - lo) / spacing)), 1)
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    # Ground plane across the full bbox.
    es = grid(scene.bbox_lo[0], scene.bbox_hi[0])
    ns = grid(scene.bbox_lo[1], scene.bbox_hi[1])
    ee, nn = np.meshgrid(es, ns)
    centers = np.stack([ee.ravel(), nn.ravel(),
                        np.full(ee.size, scene.ground_altitude)], axis=1)
    chunks.append(_patch(frame, centers, "z", sigma,
                         scene.ground_color(centers[:, 0], centers[:, 1])))

    for b in scene.boxes:
        # Top face.
        es = grid(b.lo[0], b.hi[0])
        ns = grid(b.lo[1], b.hi[1])
        ee, nn = np.meshgrid(es, ns)
        centers = np.stack([ee.ravel(), nn.ravel(),
                            np.full(ee.size, b.top_altitude)], axis=1)
        chunks.append(_patch(frame, centers, "z", sigma,
                             scene.face_color(b, 4, centers)))
        # Walls; the vertical grid spans ground to top.
        zs = grid(scene.ground_altitude, b.top_altitude)
        for face, axis, fixed in ((0, "e", b.hi[0]), (1, "e", b.lo[0]),
                                  (2, "n", b.hi[1]), (3, "n", b.lo[1])):
            line = grid(b.lo[1], b.hi[1]) if axis == "e" else grid(b.lo[0], b.hi[0])
            ll, zz = np.meshgrid(line, zs)
            if axis == "e":
                centers = np.stack([np.full(ll.size, fixed), ll.ravel(),
                                    zz.ravel()], axis=1)
            else:
                centers = np.stack([ll.ravel(), np.full(ll.size, fixed),
                                    zz.ravel()], axis=1)
            chunks.append(_patch(frame, centers, axis, sigma,
                                 scene.face_color(b, face, centers)))

    positions = np.concatenate([c[0] for c in chunks])
    log_scales = np.concatenate([c[1] for c in chunks])
    rotations = np.concatenate([c[2] for c in chunks])
    albedos = np.concatenate([c[3] for c in chunks])
    return GaussianCloud(positions=positions, log_scales=log_scales,
                         rotations=rotations,
                         opacity_logits=np.full(len(positions), _OPAQUE_LOGIT),
                         albedos=albedos)
