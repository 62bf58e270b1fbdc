"""Optimization loop.

The model starts as a uniform scatter of faint white primitives.  A warmup
phase fits photometry alone (color correction active, lighting pinned to
one); at a fixed iteration the shadow mapping and the three regularizers
switch on together and low-opacity primitives start being pruned.  The
primitive count only ever decreases: there is no densification, the
sparsity pressure plus pruning is what keeps later iterations cheap.

Positions live in the normalized world frame, whose largest half-size is
one by construction, so the usual scene-extent multiplier on the position
learning rate is identically one and the configured value is used as is.
"""

import logging
import math
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List

import numpy as np
import torch
from scipy.spatial import cKDTree

from .errors import ConfigError, NumericalError
from .geocam import build_sun_camera, footprint_mask
from .io.checkpoint import save_checkpoint
from .losses import (LossTerms, LossWeights, consistency_mask,
                     masked_difference, opaqueness, perturb_camera,
                     photometric, sparsity, total_loss)
from .shading import CameraAppearance, ShadingConfig, delta_h, form_image, \
    shade, warp_grid
from .splat import GaussianCloud, RasterSettings, render

log = logging.getLogger(__name__)

CSV_COLUMNS = ("iteration", "photometric", "opaqueness", "color_consistency",
               "altitude_consistency", "sparsity", "total", "count")


@dataclass
class TrainConfig:
    """Every knob of one training run.

    Kept flat on purpose: each field maps one-to-one to a config-file key
    and a command-line flag.
    """

    iterations: int = 5000
    enable_at: int = 1000          # shading + regularizers + pruning start here
    alpha_min: float = 0.0025
    init_opacity: float = 0.01
    init_density: float = 0.13     # primitives per cubic meter of scene box
    position_lr: float = 1.6e-4
    position_lr_final: float = 1.6e-6
    feature_lr: float = 2.5e-3
    opacity_lr: float = 5e-2
    scale_lr: float = 5e-3
    rotation_lr: float = 1e-3
    appearance_lr: float = 1e-2
    prune_every: int = 100
    seed: int = 0
    sun_gsd_factor: float = 2.0    # sun raster GSD relative to the dataset's
    shadow_hardness: float = 10.0
    perturb_scale: float = 0.05
    delta_h_min: float = 0.30
    weight_opaqueness: float = 0.1
    weight_color_consistency: float = 0.1
    weight_altitude_consistency: float = 0.01
    weight_sparsity: float = 0.01
    enable_shadows: bool = True
    enable_sparsity: bool = True
    enable_consistency: bool = True
    enable_opaqueness: bool = True
    checkpoint_every: int = 0      # 0 keeps only the final checkpoint

    def __post_init__(self):
        if self.iterations <= 0:
            raise ConfigError("iterations must be positive")
        if not 0 <= self.enable_at < self.iterations:
            raise ConfigError("enable_at must lie inside the run")
        if not 0.0 < self.alpha_min < 1.0:
            raise ConfigError("alpha_min must be in (0, 1)")
        if not 0.0 < self.init_opacity < 1.0:
            raise ConfigError("init_opacity must be in (0, 1)")
        if self.init_density <= 0.0:
            raise ConfigError("init_density must be positive")
        if self.shadow_hardness <= 0.0:
            raise ConfigError("shadow_hardness must be positive")

    def loss_weights(self):
        return LossWeights(opaqueness=self.weight_opaqueness,
                           color_consistency=self.weight_color_consistency,
                           altitude_consistency=self.weight_altitude_consistency,
                           sparsity=self.weight_sparsity)

    def shading_config(self):
        return ShadingConfig(rho=self.shadow_hardness)


def config_lines(config):
    """`key = value` lines, one per field, sorted; config files and the
    run-directory echo share this form."""
    out = []
    for f in sorted(fields(config), key=lambda f: f.name):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        out.append("%s = %s" % (f.name, value))
    return out


@dataclass
class TrainResult:
    cloud: GaussianCloud
    appearances: Dict[str, CameraAppearance]
    history: List[dict]
    seconds: float
    initial_count: int


def init_primitives(frame, bbox_lo, bbox_hi, density, rng, init_opacity=0.01):
    """Uniform scatter through the scene box.

    Count is density times the box volume; colors start white and opacity
    low so unsupported primitives fade instead of blocking.  Each axis
    scale starts at half the mean nearest-neighbor spacing, which tiles
    the volume without gross overlap for a uniform scatter.
    """
    lo = np.asarray(bbox_lo, dtype=float)
    hi = np.asarray(bbox_hi, dtype=float)
    count = int(round(density * float(np.prod(hi - lo))))
    if count <= 0:
        raise ConfigError("density %g over %s m^3 rounds to zero primitives"
                          % (density, np.prod(hi - lo)))
    points = rng.uniform(lo, hi, size=(count, 3))
    if count > 1:
        spacing = float(cKDTree(points).query(points, k=2)[0][:, 1].mean())
    else:
        spacing = float(np.min(hi - lo))
    log_scale = math.log(max(0.5 * spacing / frame.half_extent, 1e-12))
    quats = rng.standard_normal((count, 4))
    quats /= np.linalg.norm(quats, axis=1, keepdims=True)
    return GaussianCloud(
        positions=frame.world_from_utm(points),
        log_scales=np.full((count, 3), log_scale),
        rotations=quats,
        opacity_logits=np.full(count, math.log(init_opacity / (1.0 - init_opacity))),
        albedos=np.ones((count, 3)))


def build_optimizer(cloud, config):
    """Adam over the five primitive groups.

    Positions get the small-epsilon variant; the group names are what
    `prune` uses to rebind parameters after rows are dropped.
    """
    groups = [
        dict(params=[cloud.positions], lr=config.position_lr, eps=1e-15,
             name="position"),
        dict(params=[cloud.log_scales], lr=config.scale_lr, name="scale"),
        dict(params=[cloud.rotations], lr=config.rotation_lr, name="rotation"),
        dict(params=[cloud.opacity_logits], lr=config.opacity_lr, name="opacity"),
        dict(params=[cloud.albedos], lr=config.feature_lr, name="albedo"),
    ]
    return torch.optim.Adam(groups, lr=0.0, betas=(0.9, 0.999), eps=1e-8)


def position_lr_at(config, iteration):
    """Exponential interpolation from the initial to the final rate."""
    span = max(config.iterations - 1, 1)
    t = min(max(iteration / span, 0.0), 1.0)
    return config.position_lr * (config.position_lr_final / config.position_lr) ** t


def prune(cloud, optimizer, alpha_min):
    """Drop primitives whose opacity fell under the threshold.

    The per-row Adam moments of the survivors move over with them, so the
    rebuilt parameters resume mid-schedule rather than restarting cold.
    Renders are unchanged to working precision: anything below the
    threshold was already under the rasterizer's contribution cutoff.

    Returns:
        (cloud, removed count); the input cloud comes back on a no-op.

    Raises:
        NumericalError: nothing survives.
    """
    with torch.no_grad():
        keep = cloud.opacities >= alpha_min
    if not bool(keep.any()):
        raise NumericalError("pruning removed every primitive")
    if bool(keep.all()):
        return cloud, 0
    pruned = GaussianCloud(
        positions=cloud.positions.detach()[keep],
        log_scales=cloud.log_scales.detach()[keep],
        rotations=cloud.rotations.detach()[keep],
        opacity_logits=cloud.opacity_logits.detach()[keep],
        albedos=cloud.albedos.detach()[keep])
    replacements = pruned.parameter_groups()
    for group in optimizer.param_groups:
        old = group["params"][0]
        new = replacements[group["name"]]
        state = optimizer.state.pop(old, None)
        if state is not None:
            optimizer.state[new] = {
                "step": state["step"],
                "exp_avg": state["exp_avg"][keep],
                "exp_avg_sq": state["exp_avg_sq"][keep],
            }
        group["params"] = [new]
    return pruned, int((~keep).sum())


def _scene_metadata(dataset):
    """Checkpoint sidecar entries that let the exporter run without the
    dataset at hand."""
    return {"bbox_lo": [float(v) for v in dataset.bbox_lo],
            "bbox_hi": [float(v) for v in dataset.bbox_hi],
            "gsd": float(dataset.gsd),
            "zone": dataset.zone}


def _zero():
    return torch.zeros((), dtype=torch.float64)


def _grads_finite(parameters):
    for p in parameters:
        if p.grad is not None and not torch.isfinite(p.grad).all():
            return False
    return True


def train(dataset, config, run_dir=None, settings=RasterSettings()):
    """Run the full loop over a loaded scene.

    Args:
        dataset: SceneDataset with at least two frames.
        config: TrainConfig.
        run_dir: optional directory for the config echo, the per-iteration
            CSV, and checkpoints.
        settings: RasterSettings forwarded to every render.

    Returns:
        TrainResult; `history` holds one dict per iteration with the
        CSV_COLUMNS keys.
    """
    if len(dataset.frames) < 2:
        raise ConfigError("training needs at least two views, got %d"
                          % len(dataset.frames))
    frame = dataset.world_frame
    rng = np.random.default_rng(config.seed)
    weights = config.loss_weights()
    shading_cfg = config.shading_config()

    cloud = init_primitives(frame, dataset.bbox_lo, dataset.bbox_hi,
                            config.init_density, rng, config.init_opacity)
    initial_count = len(cloud)
    optimizer = build_optimizer(cloud, config)

    appearances = {fr.name: CameraAppearance() for fr in dataset.frames}
    appearance_params = [p for app in appearances.values()
                         for p in app.parameters()]
    appearance_opt = torch.optim.Adam(appearance_params,
                                      lr=config.appearance_lr)

    targets = [torch.from_numpy(np.ascontiguousarray(fr.image))
               for fr in dataset.frames]
    # Oblique views image terrain beyond the modeled box near their
    # borders; those pixels are unexplainable and would reward washed-out
    # geometry, so every data term is restricted to the box footprint.
    domains = [torch.from_numpy(footprint_mask(fr.camera, frame,
                                               dataset.bbox_lo,
                                               dataset.bbox_hi))
               for fr in dataset.frames]
    sun_cams = None
    if config.enable_shadows:
        world_bounds = (frame.world_from_utm(dataset.bbox_lo),
                        frame.world_from_utm(dataset.bbox_hi))
        sun_gsd = dataset.gsd * config.sun_gsd_factor
        sun_cams = [build_sun_camera(fr.sun, frame, world_bounds, sun_gsd)
                    for fr in dataset.frames]

    csv_file = None
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.txt").write_text("\n".join(config_lines(config)) + "\n")
        csv_file = open(run_dir / "log.csv", "w")
        csv_file.write(",".join(CSV_COLUMNS) + "\n")

    history = []
    order = np.arange(len(dataset.frames))
    started = time.perf_counter()
    try:
        for it in range(config.iterations):
            slot = it % len(order)
            if slot == 0:
                order = rng.permutation(len(order))
            view = int(order[slot])
            fr = dataset.frames[view]
            active = it >= config.enable_at

            shadows = active and config.enable_shadows
            pairing = active and config.enable_consistency
            want = "both" if (shadows or pairing) else "feature"
            targets_a = render(cloud, fr.camera, frame, what=want,
                               settings=settings)

            terms = LossTerms(photometric=_zero(), opaqueness=_zero(),
                              color_consistency=_zero(),
                              altitude_consistency=_zero(), sparsity=_zero())
            if shadows:
                targets_sun = render(cloud, sun_cams[view], frame,
                                     what="elevation", settings=settings)
                image, buffers = shade(targets_a, targets_sun, fr.camera,
                                       sun_cams[view], frame,
                                       appearances[fr.name], shading_cfg)
                if config.enable_opaqueness:
                    terms.opaqueness = opaqueness(buffers.darkening,
                                                  normalize=True,
                                                  mask=domains[view])
            else:
                image = form_image(targets_a.feature, targets_a.alpha,
                                   torch.ones((), dtype=torch.float64),
                                   appearances[fr.name])
            terms.photometric = photometric(image, targets[view],
                                            mask=domains[view])

            if pairing:
                cam_b = perturb_camera(fr.camera, frame, config.perturb_scale,
                                       rng)
                targets_b = render(cloud, cam_b, frame, what="both",
                                   settings=settings)
                grid = warp_grid(fr.camera, cam_b, targets_a.elevation, frame)
                dh = delta_h(fr.camera, cam_b, targets_a.elevation,
                             targets_b.elevation, frame, grid=grid)
                mask = consistency_mask(dh, grid, config.delta_h_min) \
                    * domains[view]
                terms.color_consistency = masked_difference(
                    targets_a.feature, targets_b.feature, grid, mask,
                    normalize=True)
                terms.altitude_consistency = masked_difference(
                    targets_a.elevation, targets_b.elevation, grid, mask,
                    normalize=True)
            if active and config.enable_sparsity:
                terms.sparsity = sparsity(cloud.opacities)

            loss = total_loss(terms, weights, regularize=active)

            optimizer.zero_grad(set_to_none=True)
            appearance_opt.zero_grad(set_to_none=True)
            loss.backward()

            primitive_params = list(cloud.parameter_groups().values())
            if _grads_finite(primitive_params + appearance_params):
                for group in optimizer.param_groups:
                    if group["name"] == "position":
                        group["lr"] = position_lr_at(config, it)
                optimizer.step()
                appearance_opt.step()
                cloud.normalize_rotations_()
                cloud.clamp_albedos_()
            else:
                warnings.warn("iteration %d: non-finite gradient, step skipped"
                              % it)

            if active and config.prune_every > 0 \
                    and (it + 1) % config.prune_every == 0:
                cloud, removed = prune(cloud, optimizer, config.alpha_min)
                if removed:
                    log.info("iteration %d: pruned %d primitives, %d left",
                             it, removed, len(cloud))

            row = {"iteration": it, "total": float(loss.detach()),
                   "count": len(cloud)}
            row.update(terms.detached())
            history.append(row)
            if csv_file is not None:
                csv_file.write(",".join(
                    "%d" % row[k] if k in ("iteration", "count")
                    else "%.10g" % row[k] for k in CSV_COLUMNS) + "\n")
            if run_dir is not None and config.checkpoint_every > 0 \
                    and (it + 1) % config.checkpoint_every == 0:
                save_checkpoint(run_dir / ("checkpoint_%06d.ckpt" % (it + 1)),
                                cloud, frame, appearances=appearances,
                                metadata=dict(_scene_metadata(dataset),
                                              iteration=it + 1,
                                              seed=config.seed))
    finally:
        if csv_file is not None:
            csv_file.close()

    seconds = time.perf_counter() - started
    if run_dir is not None:
        metadata = dict(_scene_metadata(dataset), iteration=config.iterations,
                        seed=config.seed, seconds=seconds,
                        initial_count=initial_count)
        save_checkpoint(run_dir / "model.ckpt", cloud, frame,
                        appearances=appearances, metadata=metadata)
    return TrainResult(cloud=cloud, appearances=appearances, history=history,
                       seconds=seconds, initial_count=initial_count)
