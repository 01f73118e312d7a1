"""Synthetic pair and trachea volumes, plus the brute-force diameter oracle."""

import math

import numpy as np
import pytest

from bronchometer.errors import EmptyRegion, SpecOverflow
from bronchometer.phantom import (
    BaPhantomSpec,
    TracheaPhantomSpec,
    ba_scan_volume,
    disc_mask,
    gen_ba_pair,
    gen_trachea_volume,
    oracle_max_diameter,
)


class TestBaSpecValidation:
    def test_defaults_pass(self):
        BaPhantomSpec().validate()

    def test_zero_diameter(self):
        with pytest.raises(SpecOverflow):
            BaPhantomSpec(lumen_d_px=0).validate()

    def test_rim_must_leave_core(self):
        with pytest.raises(SpecOverflow):
            BaPhantomSpec(artery_d_px=12, artery_edge_w_px=6).validate()

    def test_shapes_must_fit_frame(self):
        BaPhantomSpec(lumen_d_px=82).validate()  # 126 px still fits
        with pytest.raises(SpecOverflow):
            BaPhantomSpec(lumen_d_px=83).validate()

    def test_intensity_plan_rejected(self):
        with pytest.raises(ValueError):
            BaPhantomSpec(wall_intensity=40).validate()  # reads as artery core
        with pytest.raises(ValueError):
            BaPhantomSpec(lumen_intensity=25).validate()  # no longer black


class TestBaPair:
    def test_ground_truth_dimensions(self):
        _, truth = gen_ba_pair(BaPhantomSpec())
        assert truth["iad_px"] == 10
        assert truth["oad_px"] == 16
        assert truth["ard_px"] == 12
        assert truth["wt_px"] == 3
        assert truth["airway_center"] == [13.5, 63.5]
        assert truth["artery_center"] == [43.5, 63.5]
        assert truth["suggested_roi"] == [2, 51, 53, 75]

    def test_intensities_at_known_pixels(self):
        frame, truth = gen_ba_pair(BaPhantomSpec())
        ax = int(truth["airway_center"][0])
        bx = int(truth["artery_center"][0])
        assert frame[0, 0] == 10  # parenchyma
        assert frame[63, ax] == 0  # lumen
        assert frame[63, ax + 6] == 150  # wall ring
        assert frame[63, bx] == 70  # artery core
        assert frame[58, bx] == 35  # artery rim, one row outside the core
        assert frame.dtype == np.uint8

    def test_noise_is_seeded(self):
        spec = BaPhantomSpec(noise_sigma=2.0)
        a, _ = gen_ba_pair(spec, seed=1)
        b, _ = gen_ba_pair(spec, seed=1)
        c, _ = gen_ba_pair(spec, seed=2)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_noise_respects_label_bands(self):
        # noisy pixels must keep their label so the matchers still work
        spec = BaPhantomSpec(noise_sigma=2.0)
        frame, truth = gen_ba_pair(spec, seed=3)
        h, w = frame.shape
        yy, xx = np.ogrid[:h, :w]

        def disc(center, d):
            cx, cy = center
            return (xx - cx) ** 2 + (yy - cy) ** 2 <= (d / 2.0) ** 2

        lumen = disc(truth["airway_center"], truth["iad_px"])
        outer = disc(truth["airway_center"], truth["oad_px"])
        artery = disc(truth["artery_center"], truth["ard_px"])
        core = disc(truth["artery_center"], truth["ard_px"] - 2)
        assert (frame[lumen] <= 20).all()
        assert (frame[outer & ~lumen] > 45).all()
        assert (frame[artery & ~core] > 25).all() and (frame[artery & ~core] <= 45).all()
        assert (frame[core] > 45).all() and (frame[core] <= 100).all()
        assert (frame[~(outer | artery)] <= 20).all()

    def test_scan_volume_wrapping(self):
        volume, truth = ba_scan_volume(BaPhantomSpec())
        m = volume.manifest
        assert m.scan_id == "phantom-ba-l10-w3-a12"
        assert m.frame_count == 1 and volume.frames.shape == (1, 128, 128)
        assert m.window == "lung"
        assert m.pixel_spacing_mm == (0.33, 0.33)
        assert truth["iad_px"] == 10


class TestTracheaVolume:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_frames": 1},
            {"split_frame": 0},
            {"n_frames": 60, "split_frame": 60},
            {"frame_size": 100},
            {"bronchi_gap_px": 0},
        ],
    )
    def test_spec_rejects(self, kwargs):
        with pytest.raises(SpecOverflow):
            TracheaPhantomSpec(**kwargs).validate()

    def test_volume_shape_and_id(self, trachea_small):
        volume, split = trachea_small
        assert split == 40
        assert volume.frames.shape == (60, 512, 512)
        assert volume.manifest.scan_id == "phantom-trachea-mediastinum-s40-g5"
        assert volume.manifest.window == "mediastinum"

    def test_split_opens_a_gap_on_the_midline(self, trachea_small):
        volume, split = trachea_small
        frames = volume.frames
        assert frames[split - 1, 245, 235] == 0  # single trachea
        assert frames[split, 245, 235] == 120  # body fills the gap
        assert frames[split, 245, 223] == 0  # left bronchus center
        assert frames[split, 245, 248] == 0  # right bronchus center

    def test_lung_window_adds_fields(self):
        spec = TracheaPhantomSpec(n_frames=12, split_frame=6, frame_size=256)
        med, _ = gen_trachea_volume(spec, window="mediastinum")
        lung, _ = gen_trachea_volume(spec, window="lung")
        assert lung.manifest.scan_id.startswith("phantom-trachea-lung-")
        assert (lung.frames[0] == 3).sum() > 0
        assert (med.frames[0] == 3).sum() == 0


class TestDiameterOracle:
    def test_single_pixel(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1] = True
        assert oracle_max_diameter(mask) == 0.0

    def test_pythagorean_pair(self):
        mask = np.zeros((5, 6), dtype=bool)
        mask[0, 0] = mask[3, 4] = True
        assert oracle_max_diameter(mask) == 5.0

    def test_empty_raises(self):
        with pytest.raises(EmptyRegion):
            oracle_max_diameter(np.zeros((3, 3), dtype=bool))

    def test_disc_values(self):
        assert oracle_max_diameter(disc_mask(10)) == pytest.approx(math.sqrt(98))
        assert oracle_max_diameter(disc_mask(12)) == pytest.approx(math.sqrt(130))

    def test_monotone_in_diameter(self):
        values = [oracle_max_diameter(disc_mask(d)) for d in range(6, 22, 2)]
        assert values == sorted(values)
        for d, v in zip(range(6, 22, 2), values):
            assert d - 1.5 <= v <= d

    def test_disc_mask_rejects_zero(self):
        with pytest.raises(SpecOverflow):
            disc_mask(0)
