"""Round trips and failure modes of the on-disk formats."""

import json

import numpy as np
import pytest
import torch
from PIL import Image

from satsplat.errors import DataError
from satsplat.evalsynth import (DsmRaster, OracleAppearance, generate_scene,
                                oracle_render, true_dsm)
from satsplat.geocam import WorldFrame
from satsplat.io import (load_checkpoint, load_dataset, load_image, read_dsm,
                         read_pfm, save_checkpoint, save_dataset, save_image,
                         write_dsm, write_pfm)
from satsplat.shading import CameraAppearance

from conftest import random_cloud


class TestPfm:
    def test_gray_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.normal(scale=40.0, size=(9, 13)).astype(np.float32)
        write_pfm(tmp_path / "x.pfm", data)
        np.testing.assert_array_equal(read_pfm(tmp_path / "x.pfm"), data)

    def test_color_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        data = rng.uniform(-5, 5, size=(4, 6, 3)).astype(np.float32)
        write_pfm(tmp_path / "c.pfm", data)
        np.testing.assert_array_equal(read_pfm(tmp_path / "c.pfm"), data)

    def test_rows_stored_bottom_up(self, tmp_path):
        # The format stores the bottom raster row first; spot-check the
        # bytes so a symmetric read/write bug cannot hide.
        data = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        write_pfm(tmp_path / "o.pfm", data)
        raw = (tmp_path / "o.pfm").read_bytes()
        payload = np.frombuffer(raw.split(b"\n", 3)[3], dtype="<f4")
        np.testing.assert_array_equal(payload, [3.0, 4.0, 1.0, 2.0])

    def test_nan_survives(self, tmp_path):
        data = np.array([[np.nan, 1.0]], dtype=np.float32)
        write_pfm(tmp_path / "n.pfm", data)
        back = read_pfm(tmp_path / "n.pfm")
        assert np.isnan(back[0, 0]) and back[0, 1] == 1.0


class TestDsmSidecar:
    def test_round_trip(self, tmp_path):
        values = np.array([[2.0, np.nan], [3.5, 4.0]])
        dsm = DsmRaster(values=values, gsd=0.5, origin=(448000.25, 5411063.75))
        write_dsm(tmp_path / "dsm", dsm, "31N")
        back, zone = read_dsm(tmp_path / "dsm")
        np.testing.assert_array_equal(back.values, values)
        assert back.gsd == 0.5
        assert back.origin == (448000.25, 5411063.75)
        assert zone == "31N"

    def test_missing_sidecar_field(self, tmp_path):
        dsm = DsmRaster(values=np.zeros((2, 2)), gsd=1.0, origin=(0.0, 0.0))
        write_dsm(tmp_path / "dsm", dsm, "31N")
        (tmp_path / "dsm.txt").write_text("gsd = 1.0\n")
        with pytest.raises(DataError):
            read_dsm(tmp_path / "dsm")


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        cloud = random_cloud(rng, 37)
        frame = WorldFrame.from_bbox((0, 100), (0, 100), (0, 30), "32N")
        app = CameraAppearance()
        with torch.no_grad():
            app.color_matrix += 0.01 * torch.randn(3, 3, dtype=torch.float64)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, cloud, frame, appearances={"view_00": app},
                        metadata={"iteration": 123})
        loaded, frame2, apps, meta = load_checkpoint(path)
        for name, value in cloud.parameter_groups().items():
            stored = loaded.parameter_groups()[name]
            # records are float32 on disk
            np.testing.assert_allclose(stored.detach(), value.detach(),
                                       atol=1e-6)
            assert stored.requires_grad
        np.testing.assert_array_equal(frame2.center, frame.center)
        assert frame2.half_extent == frame.half_extent
        assert frame2.zone == "32N"
        torch.testing.assert_close(apps["view_00"].color_matrix,
                                   app.color_matrix, atol=1e-7, rtol=0)
        assert meta["iteration"] == 123
        assert meta["count"] == 37

    def test_truncated_payload(self, tmp_path):
        cloud = random_cloud(np.random.default_rng(1), 5)
        frame = WorldFrame.from_bbox((0, 10), (0, 10), (0, 5), "31N")
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, cloud, frame)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(DataError):
            load_checkpoint(path)

    def test_missing_sidecar(self, tmp_path):
        cloud = random_cloud(np.random.default_rng(1), 5)
        frame = WorldFrame.from_bbox((0, 10), (0, 10), (0, 5), "31N")
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, cloud, frame)
        (tmp_path / "model.ckpt.json").unlink()
        with pytest.raises(DataError):
            load_checkpoint(path)


def small_bundle(seed=3, n_views=3):
    bundle = generate_scene(seed=seed, n_views=n_views, size=24.0, gsd=1.0)
    images = {v.name: oracle_render(bundle.scene, v.camera, v.sun,
                                    appearance=OracleAppearance(gain=v.gain)).image
              for v in bundle.views}
    return bundle, images


class TestDataset:
    def test_round_trip(self, tmp_path):
        bundle, images = small_bundle()
        gt = true_dsm(bundle.scene, gsd=1.0)
        save_dataset(tmp_path, bundle, images, gt_dsm=gt)
        ds = load_dataset(tmp_path)
        assert len(ds) == 3
        assert ds.zone == bundle.scene.zone
        assert ds.gsd == bundle.gsd
        np.testing.assert_array_equal(ds.bbox_lo, bundle.scene.bbox_lo)
        for fr in ds.frames:
            # 8-bit quantization is the only loss allowed
            assert np.abs(fr.image - images[fr.name]).max() <= 0.5 / 255 + 1e-12
            assert fr.fit_stats is not None
            assert fr.fit_stats.mean_px < 0.05
            assert fr.rpc is not None
        np.testing.assert_allclose(ds.gt_dsm.values, gt.values, atol=1e-6)

    def test_frame_names_follow_files(self, tmp_path):
        bundle, images = small_bundle()
        save_dataset(tmp_path, bundle, images)
        ds = load_dataset(tmp_path)
        assert [fr.name for fr in ds.frames] == sorted(images)

    def test_missing_metadata_names_the_frame(self, tmp_path):
        bundle, images = small_bundle()
        save_dataset(tmp_path, bundle, images)
        (tmp_path / "meta" / "view_01.json").unlink()
        with pytest.raises(DataError, match="view_01"):
            load_dataset(tmp_path)

    def test_missing_sun_names_the_frame(self, tmp_path):
        bundle, images = small_bundle()
        save_dataset(tmp_path, bundle, images)
        meta_path = tmp_path / "meta" / "view_02.json"
        meta = json.loads(meta_path.read_text())
        del meta["sun_elevation_deg"]
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(DataError, match="view_02"):
            load_dataset(tmp_path)

    def test_no_scene_json(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(tmp_path)

    def test_no_images(self, tmp_path):
        bundle, images = small_bundle()
        save_dataset(tmp_path, bundle, images)
        for p in (tmp_path / "images").glob("*.png"):
            p.unlink()
        with pytest.raises(DataError):
            load_dataset(tmp_path)

    def test_precomputed_affine_camera(self, tmp_path):
        bundle, images = small_bundle()
        save_dataset(tmp_path, bundle, images)
        meta_path = tmp_path / "meta" / "view_00.json"
        cam = bundle.views[0].camera
        meta_path.write_text(json.dumps({
            "affine": cam.to_dict(),
            "sun_azimuth_deg": bundle.views[0].sun.azimuth_deg,
            "sun_elevation_deg": bundle.views[0].sun.elevation_deg}))
        ds = load_dataset(tmp_path)
        fr = ds.frames[0]
        assert fr.rpc is None and fr.fit_stats is None
        np.testing.assert_array_equal(fr.camera.A, cam.A)

    def test_masks_loaded(self, tmp_path):
        bundle, images = small_bundle()
        gt = true_dsm(bundle.scene, gsd=1.0)
        save_dataset(tmp_path, bundle, images, gt_dsm=gt)
        mask = np.zeros((24, 24), dtype=np.uint8)
        mask[:12] = 255
        Image.fromarray(mask, mode="L").save(tmp_path / "gt" / "mask_water.png")
        ds = load_dataset(tmp_path)
        assert set(ds.masks) == {"water"}
        assert ds.masks["water"].sum() == 12 * 24


class TestImages:
    def test_sixteen_bit_scaling(self, tmp_path):
        arr = np.array([[0, 32768], [65535, 1000]], dtype=np.uint16)
        Image.fromarray(arr).save(tmp_path / "img.png")
        loaded = load_image(tmp_path / "img.png")
        assert loaded.shape == (3, 2, 2)
        np.testing.assert_allclose(loaded[0], arr / 65535.0)

    def test_gray_becomes_three_channels(self, tmp_path):
        arr = np.array([[0, 128], [255, 64]], dtype=np.uint8)
        Image.fromarray(arr, mode="L").save(tmp_path / "img.png")
        loaded = load_image(tmp_path / "img.png")
        assert loaded.shape == (3, 2, 2)
        np.testing.assert_array_equal(loaded[0], loaded[2])

    def test_save_then_load_is_quantization_only(self, tmp_path):
        rng = np.random.default_rng(3)
        image = rng.uniform(0, 1, (3, 5, 7))
        save_image(tmp_path / "img.png", image)
        back = load_image(tmp_path / "img.png")
        assert np.abs(back - image).max() <= 0.5 / 255 + 1e-12
