"""Command-line surface.

    satsplat synth        write a synthetic dataset with ground truth
    satsplat fit-cameras  report per-frame affine camera residuals
    satsplat train        optimize a model over a scene directory
    satsplat render       emit shaded/albedo/shadow/elevation rasters
    satsplat dsm          export a surface model from a checkpoint
    satsplat eval         compare a surface model against ground truth

Every training config field is reachable both as a `key = value` line in
a config file and as a flag; flags win.  Exit codes: 0 success, 2 bad
configuration (argparse uses the same code for unknown flags), 3 broken
input data, 4 numerical failure.
"""

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .training import TrainConfig, train

log = logging.getLogger(__name__)


def _add_train_config_flags(parser):
    group = parser.add_argument_group("training config overrides")
    for f in fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type is bool:
            group.add_argument(flag, dest=f.name, default=None,
                               action=argparse.BooleanOptionalAction,
                               help="default %s" % f.default)
        else:
            group.add_argument(flag, dest=f.name, default=None, type=f.type,
                               help="default %s" % f.default)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError("not a boolean: %r" % text)


def read_config_file(path):
    """Parse `key = value` lines; # starts a comment."""
    mapping = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected key = value, got %r"
                                  % (path, lineno, line))
            key, _, value = line.partition("=")
            mapping[key.strip()] = value.strip()
    return mapping


def build_train_config(args):
    """Defaults, then the config file, then explicit flags."""
    by_name = {f.name: f for f in fields(TrainConfig)}
    values = {}
    if args.config is not None:
        for key, raw in read_config_file(args.config).items():
            if key not in by_name:
                raise ConfigError("%s: unknown config key %r"
                                  % (args.config, key))
            typ = by_name[key].type
            try:
                values[key] = _parse_bool(raw) if typ is bool else typ(raw)
            except (TypeError, ValueError):
                raise ConfigError("%s: bad value %r for %s"
                                  % (args.config, raw, key))
    for name in by_name:
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    return TrainConfig(**values)


def _save_gray(path, raster):
    from PIL import Image
    arr = np.clip(np.asarray(raster, dtype=float), 0.0, 1.0)
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(path)


def cmd_synth(args):
    from .evalsynth import (OracleAppearance, generate_scene, oracle_render,
                            true_dsm, visibility_counts)
    from .io import pfm, save_dataset

    bundle = generate_scene(seed=args.seed, n_views=args.views,
                            n_boxes=args.boxes, size=args.size, gsd=args.gsd,
                            zone=args.zone, ground_altitude=args.ground_altitude)
    images = {}
    for view in bundle.views:
        out = oracle_render(bundle.scene, view.camera, view.sun,
                            appearance=OracleAppearance(gain=view.gain))
        images[view.name] = out.image
    gt = true_dsm(bundle.scene, gsd=args.gsd)
    save_dataset(args.out, bundle, images, gt_dsm=gt)

    counts = visibility_counts(bundle.scene,
                               [v.camera for v in bundle.views], args.gsd)
    pfm.write_pfm(Path(args.out) / "gt" / "visibility.pfm",
                  counts.astype(np.float32))
    print("wrote %d views (%d x %d px) to %s"
          % (len(bundle.views), images[bundle.views[0].name].shape[2],
             images[bundle.views[0].name].shape[1], args.out))


def cmd_fit_cameras(args):
    from .io import load_dataset

    dataset = load_dataset(args.dataset)
    print("%-12s %12s %12s" % ("frame", "mean px", "max px"))
    means = []
    for fr in dataset.frames:
        if fr.fit_stats is None:
            print("%-12s %12s %12s" % (fr.name, "n/a", "n/a"))
            continue
        means.append(fr.fit_stats.mean_px)
        print("%-12s %12.5f %12.5f"
              % (fr.name, fr.fit_stats.mean_px, fr.fit_stats.max_px))
    if means:
        print("%-12s %12.5f" % ("overall", float(np.mean(means))))


def cmd_train(args):
    from .io import load_dataset

    config = build_train_config(args)
    dataset = load_dataset(args.dataset)
    result = train(dataset, config, run_dir=args.run_dir)
    final = result.history[-1]
    print("trained %d iterations in %.1f s" % (config.iterations, result.seconds))
    print("primitives %d -> %d" % (result.initial_count, len(result.cloud)))
    print("final loss %.5f (photometric %.5f)"
          % (final["total"], final["photometric"]))
    print("checkpoint: %s" % (Path(args.run_dir) / "model.ckpt"))


def cmd_render(args):
    import torch

    from .geocam import build_sun_camera
    from .io import load_checkpoint, load_dataset, pfm, save_image
    from .shading import CameraAppearance, shade
    from .splat import render

    cloud, frame, appearances, _ = load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.dataset)
    matches = [fr for fr in dataset.frames if fr.name == args.frame]
    if not matches:
        raise DataError("no frame named %r in %s (have: %s)"
                        % (args.frame, args.dataset,
                           ", ".join(fr.name for fr in dataset.frames)))
    fr = matches[0]
    appearance = appearances.get(fr.name) or CameraAppearance()

    sun_gsd = args.sun_gsd if args.sun_gsd else 2.0 * dataset.gsd
    bounds = (frame.world_from_utm(dataset.bbox_lo),
              frame.world_from_utm(dataset.bbox_hi))
    sun_cam = build_sun_camera(fr.sun, frame, bounds, sun_gsd)
    with torch.no_grad():
        targets = render(cloud, fr.camera, frame, what="both")
        targets_sun = render(cloud, sun_cam, frame, what="elevation")
        image, buffers = shade(targets, targets_sun, fr.camera, sun_cam,
                               frame, appearance, args_shading(args))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_image(out / (fr.name + "_shaded.png"), image.clamp(0, 1).numpy())
    save_image(out / (fr.name + "_albedo.png"),
               targets.feature.clamp(0, 1).numpy())
    _save_gray(out / (fr.name + "_shadow.png"), buffers.darkening.numpy())
    pfm.write_pfm(out / (fr.name + "_elevation.pfm"),
                  targets.elevation.numpy().astype(np.float32))
    if args.dump_shading:
        pfm.write_pfm(out / (fr.name + "_delta_h.pfm"),
                      buffers.delta_h.numpy().astype(np.float32))
        pfm.write_pfm(out / (fr.name + "_darkening.pfm"),
                      buffers.darkening.numpy().astype(np.float32))
        pfm.write_pfm(out / (fr.name + "_sun_elevation.pfm"),
                      targets_sun.elevation.numpy().astype(np.float32))
    print("wrote %s_{shaded,albedo,shadow}.png and %s_elevation.pfm to %s"
          % (fr.name, fr.name, out))


def args_shading(args):
    from .shading import ShadingConfig
    return ShadingConfig(rho=args.shadow_hardness)


def cmd_dsm(args):
    from .evalsynth import extract_dsm
    from .io import load_checkpoint, load_dataset, write_dsm

    cloud, frame, _, meta = load_checkpoint(args.checkpoint)
    if args.dataset is not None:
        dataset = load_dataset(args.dataset)
        bbox_lo, bbox_hi = dataset.bbox_lo, dataset.bbox_hi
        gsd, zone = dataset.gsd, dataset.zone
    elif "bbox_lo" in meta:
        bbox_lo = np.asarray(meta["bbox_lo"], dtype=float)
        bbox_hi = np.asarray(meta["bbox_hi"], dtype=float)
        gsd, zone = float(meta["gsd"]), str(meta.get("zone", frame.zone))
    else:
        raise DataError("%s carries no scene box; pass --dataset"
                        % args.checkpoint)
    if args.gsd is not None:
        gsd = args.gsd

    dsm = extract_dsm(cloud, frame, gsd, bbox_lo, bbox_hi)
    write_dsm(args.out, dsm, zone)
    covered = float(np.isfinite(dsm.values).mean())
    print("wrote %s.pfm (%d x %d px at %.2f m, %.1f%% covered)"
          % (args.out, dsm.values.shape[1], dsm.values.shape[0], gsd,
             100.0 * covered))


def _print_mae(label, result):
    print("%-24s MAE %.3f m  (coverage %.1f%%, %d px)"
          % (label, result.mae, 100.0 * result.coverage, result.n_pixels))


def cmd_eval(args):
    from .evalsynth import mae
    from .io import pfm, read_dsm

    if args.gt is None and args.dataset is None:
        raise ConfigError("eval needs --gt or --dataset")
    dsm, _ = read_dsm(args.dsm)
    if args.gt is not None:
        gt, _ = read_dsm(args.gt)
    else:
        gt_base = Path(args.dataset) / "gt" / "dsm"
        if not gt_base.with_suffix(".pfm").exists():
            raise DataError("%s has no gt/dsm.pfm" % args.dataset)
        gt, _ = read_dsm(gt_base)

    _print_mae("all pixels", mae(dsm, gt))

    masks = []
    if args.mask is not None:
        from PIL import Image
        with Image.open(args.mask) as img:
            masks.append((Path(args.mask).stem, np.asarray(img) > 0))
    elif args.dataset is not None:
        from .io import load_dataset
        loaded = load_dataset(args.dataset)
        for name, mask in (loaded.masks or {}).items():
            masks.append(("mask " + name, mask))
    for name, mask in masks:
        _print_mae(name, mae(dsm, gt, mask=mask))

    vis_path = None
    if args.visibility is not None:
        vis_path = Path(args.visibility)
    elif args.dataset is not None:
        candidate = Path(args.dataset) / "gt" / "visibility.pfm"
        if candidate.exists():
            vis_path = candidate
    if vis_path is not None:
        counts = np.rint(pfm.read_pfm(vis_path)).astype(int)
        if counts.shape != dsm.values.shape:
            raise DataError("visibility grid %s does not match the DSM"
                            % (counts.shape,))
        comparable = np.isfinite(dsm.values) & np.isfinite(gt.values)
        for c in np.unique(counts):
            chosen = counts == c
            if not (chosen & comparable).any():
                continue
            _print_mae("seen by %d camera%s" % (c, "" if c == 1 else "s"),
                       mae(dsm, gt, mask=chosen))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="satsplat",
        description="Gaussian-splatting photogrammetry for satellite imagery")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--out", required=True, help="destination directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--views", type=int, default=10)
    p.add_argument("--boxes", type=int, default=3)
    p.add_argument("--size", type=float, default=64.0, help="side length, m")
    p.add_argument("--gsd", type=float, default=0.5, help="m per pixel")
    p.add_argument("--zone", default="31N")
    p.add_argument("--ground-altitude", type=float, default=2.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit-cameras", help="affine residuals per frame")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_fit_cameras)

    p = sub.add_parser("train", help="optimize a model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--run-dir", required=True,
                   help="destination for the config echo, log.csv and "
                        "checkpoints")
    p.add_argument("--config", help="key = value file of config overrides")
    _add_train_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("render", help="rasters for one frame")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--frame", required=True, help="frame name, e.g. view_03")
    p.add_argument("--out", required=True)
    p.add_argument("--sun-gsd", type=float, default=None,
                   help="shadow raster GSD in m (default 2x dataset GSD)")
    p.add_argument("--shadow-hardness", type=float, default=10.0)
    p.add_argument("--dump-shading", action="store_true",
                   help="also write delta-h/darkening/sun-elevation PFMs")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("dsm", help="export a surface model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output base path (no suffix)")
    p.add_argument("--gsd", type=float, default=None)
    p.add_argument("--dataset", help="scene box source if the checkpoint "
                                     "lacks one")
    p.set_defaults(func=cmd_dsm)

    p = sub.add_parser("eval", help="MAE against ground truth")
    p.add_argument("--dsm", required=True, help="DSM base path (no suffix)")
    p.add_argument("--gt", help="ground-truth DSM base path")
    p.add_argument("--dataset", help="pull gt, masks and visibility from "
                                     "this scene directory")
    p.add_argument("--mask", help="binary PNG restricting the evaluation")
    p.add_argument("--visibility", help="per-pixel camera-count PFM")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except DataError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 3
    except NumericalError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 4
    return 0 if result is None else result


if __name__ == "__main__":
    sys.exit(main())
