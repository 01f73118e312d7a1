"""Batch CLI: verbs drive the same code paths as the service."""

import json
import subprocess
import sys

import pytest

from bronchometer import cli


def _run(argv):
    return cli.main(argv)


@pytest.fixture()
def trachea_dir(scans_root):
    return str(scans_root / "trachea")


@pytest.fixture()
def ba_dir(scans_root):
    return str(scans_root / "ba")


class TestPhantomVerb:
    def test_ba_writes_frame_truth_manifest(self, tmp_path):
        out = tmp_path / "ba"
        assert _run(["phantom", "ba", "--out", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == [
            "frame_0000.png",
            "ground_truth.json",
            "manifest.json",
        ]
        truth = json.loads((out / "ground_truth.json").read_text())
        assert truth["iad_px"] == 10 and truth["ard_px"] == 12

    def test_trachea_volume(self, tmp_path):
        out = tmp_path / "tr"
        rc = _run(["phantom", "trachea", "--frames", "60", "--split", "40", "--out", str(out)])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["frame_count"] == 60
        assert len(list(out.glob("frame_*.png"))) == 60


class TestCarinaVerb:
    def test_detects_and_writes_artifacts(self, tmp_path, trachea_dir, capsys):
        out = tmp_path / "carina.json"
        assert _run(["carina", "--scan", trachea_dir, "--out", str(out)]) == 0
        assert "carina at frame 40 (gap 5 px, 3 candidate frames)" in capsys.readouterr().out
        body = json.loads(out.read_text())
        assert body["carina_frame"] == 40 and body["gap_px"] == 5
        csv_path = out.parent / "carina_candidates.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "frame_index,box_a,box_b,gap_px"
        assert lines[1] == '40,"(213, 237, 233, 253)","(238, 237, 258, 253)",5'

    def test_missing_scan_exits_2(self, tmp_path, capsys):
        rc = _run(["carina", "--scan", str(tmp_path / "nope"), "--out", str(tmp_path / "c.json")])
        assert rc == 2
        assert "error MissingManifest:" in capsys.readouterr().err

    def test_unsatisfiable_gap_exits_3(self, tmp_path, trachea_dir, capsys):
        rc = _run(
            [
                "carina",
                "--scan",
                trachea_dir,
                "--gap",
                "1:2",
                "--out",
                str(tmp_path / "c.json"),
            ]
        )
        assert rc == 3
        assert "NoCarinaFound" in capsys.readouterr().err

    def test_bad_range_syntax_exits_2(self, tmp_path, trachea_dir, capsys):
        rc = _run(
            ["carina", "--scan", trachea_dir, "--gap", "5", "--out", str(tmp_path / "c.json")]
        )
        assert rc == 2
        assert "expects LO:HI" in capsys.readouterr().err


class TestRllVerb:
    @pytest.fixture()
    def carina_json(self, tmp_path, trachea_dir):
        out = tmp_path / "carina.json"
        _run(["carina", "--scan", trachea_dir, "--out", str(out)])
        return str(out)

    def test_crops_after_carina(self, tmp_path, trachea_dir, carina_json):
        out_dir = tmp_path / "rll"
        rc = _run(
            ["rll", "--scan", trachea_dir, "--carina", carina_json, "--out-dir", str(out_dir)]
        )
        assert rc == 0
        pngs = sorted(p.name for p in out_dir.glob("rll_*.png"))
        assert len(pngs) == 19
        assert pngs[0] == "rll_0041.png" and pngs[-1] == "rll_0059.png"
        index = json.loads((out_dir / "rll_index.json").read_text())
        assert [f["frame_index"] for f in index["frames"]] == list(range(41, 60))

    def test_dx_without_dy_exits_2(self, tmp_path, trachea_dir, carina_json, capsys):
        rc = _run(
            [
                "rll",
                "--scan",
                trachea_dir,
                "--carina",
                carina_json,
                "--dx",
                "30",
                "--out-dir",
                str(tmp_path / "r"),
            ]
        )
        assert rc == 2
        assert "--dx and --dy must be given together" in capsys.readouterr().err

    def test_missing_carina_file_exits_2(self, tmp_path, trachea_dir, capsys):
        rc = _run(
            [
                "rll",
                "--scan",
                trachea_dir,
                "--carina",
                str(tmp_path / "none.json"),
                "--out-dir",
                str(tmp_path / "r"),
            ]
        )
        assert rc == 2


class TestMeasureVerb:
    @pytest.fixture()
    def roi_file(self, tmp_path):
        path = tmp_path / "rois.json"
        path.write_text(json.dumps([{"frame_index": 0, "rect": [2, 51, 53, 75]}]))
        return str(path)

    def test_writes_csv_and_json(self, tmp_path, ba_dir, roi_file):
        out = tmp_path / "m.csv"
        rc = _run(
            ["measure", "--scan", ba_dir, "--roi", roi_file, "--wt-seed", "7", "--out", str(out)]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "dbap_id,iad_mm,ard_mm,bar,wt_mm"
        assert lines[1] == "1,2.98,3.01,0.99,1.08"
        sidecar = json.loads(out.with_suffix(".json").read_text())
        assert sidecar["measurements"][0]["wt_seed"] == 7

    def test_env_seed_matches_flag(self, tmp_path, ba_dir, roi_file, monkeypatch):
        flag_out = tmp_path / "flag.csv"
        _run(["measure", "--scan", ba_dir, "--roi", roi_file, "--wt-seed", "7", "--out", str(flag_out)])
        env_out = tmp_path / "env.csv"
        monkeypatch.setenv("BRONCHOMETER_SEED", "7")
        _run(["measure", "--scan", ba_dir, "--roi", roi_file, "--out", str(env_out)])
        assert env_out.read_bytes() == flag_out.read_bytes()

    def test_flag_overrides_env(self, tmp_path, ba_dir, roi_file, monkeypatch):
        monkeypatch.setenv("BRONCHOMETER_SEED", "3")
        out = tmp_path / "m.csv"
        _run(["measure", "--scan", ba_dir, "--roi", roi_file, "--wt-seed", "7", "--out", str(out)])
        sidecar = json.loads(out.with_suffix(".json").read_text())
        assert sidecar["measurements"][0]["wt_seed"] == 7

    def test_bad_env_seed_exits_2(self, tmp_path, ba_dir, roi_file, monkeypatch, capsys):
        monkeypatch.setenv("BRONCHOMETER_SEED", "abc")
        rc = _run(["measure", "--scan", ba_dir, "--roi", roi_file, "--out", str(tmp_path / "m.csv")])
        assert rc == 2
        assert "BRONCHOMETER_SEED must be an integer, got 'abc'" in capsys.readouterr().err

    def test_roi_file_must_be_a_list(self, tmp_path, ba_dir, capsys):
        bad = tmp_path / "rois.json"
        bad.write_text('{"frame_index": 0}')
        rc = _run(["measure", "--scan", ba_dir, "--roi", str(bad), "--out", str(tmp_path / "m.csv")])
        assert rc == 2
        assert "must hold a JSON list" in capsys.readouterr().err


class TestParserWiring:
    def test_serve_defaults(self):
        args = cli.build_parser().parse_args(
            ["serve", "--scans", "s", "--sessions", "t"]
        )
        assert args.port == 8000
        assert args.host == "127.0.0.1"
        assert args.ui is None
        assert args.func is cli.cmd_serve

    def test_entry_point_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "bronchometer.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        for verb in ("carina", "rll", "measure", "phantom", "serve", "validate"):
            assert verb in proc.stdout
