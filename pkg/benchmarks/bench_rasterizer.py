"""Compare the compiled and numpy rasterizer backends on one scene.

Renders the same Gaussian cloud through the same camera with both kernel
implementations, times forward and forward+backward passes, and verifies
the outputs agree to float64 round-off.  Run from the repo root:

    python3 benchmarks/bench_rasterizer.py [--views 4] [--repeats 3]
"""

import argparse
import time

import numpy as np
import torch

from satsplat.evalsynth import generate_scene
from satsplat.splat import RasterSettings, render
from satsplat.splat.backend import backend_name, load_backend
from satsplat.training import init_primitives


def build_case(seed, size, gsd, density):
    bundle = generate_scene(seed=seed, n_views=4, n_boxes=3, size=size,
                            gsd=gsd)
    rng = np.random.default_rng(seed)
    lo, hi = bundle.scene.bbox_lo, bundle.scene.bbox_hi
    cloud = init_primitives(bundle.frame, lo, hi, density, rng,
                            init_opacity=0.5)
    cams = [v.camera for v in bundle.views]
    return cloud, cams, bundle.frame


def time_backend(cloud, cams, frame, backend, repeats):
    settings = RasterSettings(backend=backend)
    fwd = bwd = 0.0
    outputs = []
    for _ in range(repeats):
        for cam in cams:
            t0 = time.perf_counter()
            targets = render(cloud, cam, frame, settings=settings)
            t1 = time.perf_counter()
            loss = targets.feature.sum() + targets.elevation.sum()
            loss.backward()
            bwd += time.perf_counter() - t1
            fwd += t1 - t0
            outputs.append(targets.feature.detach())
            for p in cloud.parameter_groups().values():
                p.grad = None
    return fwd, bwd, outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=float, default=64.0)
    ap.add_argument("--gsd", type=float, default=0.5)
    ap.add_argument("--density", type=float, default=0.13)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if backend_name(load_backend("auto")) != "compiled":
        print("note: compiled extension unavailable, timing numpy twice")

    cloud, cams, frame = build_case(3, args.size, args.gsd, args.density)
    px = cams[0].height * cams[0].width
    print("%d primitives, %d views of %d px, %d repeats"
          % (len(cloud), len(cams), px, args.repeats))

    results = {}
    for backend in ("compiled", "numpy"):
        try:
            fwd, bwd, outs = time_backend(cloud, cams, frame, backend,
                                          args.repeats)
        except ImportError:
            print("%-9s unavailable" % backend)
            continue
        n = args.repeats * len(cams)
        results[backend] = (fwd / n, bwd / n, outs)
        print("%-9s forward %7.1f ms   backward %7.1f ms   per render"
              % (backend, 1e3 * fwd / n, 1e3 * bwd / n))

    if len(results) == 2:
        worst = max(float((a - b).abs().max())
                    for a, b in zip(results["compiled"][2],
                                    results["numpy"][2]))
        print("max |compiled - numpy| over all feature rasters: %.3g" % worst)
        speedup = results["numpy"][0] / results["compiled"][0]
        print("forward speedup: %.1fx" % speedup)


if __name__ == "__main__":
    main()
