"""End-to-end command-line tests, run in process through cli.main()."""

import json
import subprocess
import sys

import numpy as np
import pytest

from bandtrack import (
    DEFAULT_ORBIT,
    DEFAULT_SENSOR,
    OrbitSpec,
    delta_t_color,
    write_report,
)
from bandtrack.cli import main
from bandtrack.pipeline import detection_report

# Element sets reused from the I/O tests; checksums are valid as written.
FLOCK_TLE = (
    "1 47449U 21006AX  22150.50000000  .00001000  00000-0  50000-4 0  9992",
    "2 47449  97.4500 150.0000 0002000  90.0000 270.0000 15.15000000 12343",
)

SMALL_SCRIPT = {
    "scene": {
        "width_px": 128,
        "height_px": 128,
        "grid_spacing_m": 3.0,
        "scene_id": "cli-small",
    },
    "background": {
        "level": 9000.0,
        "texture_amplitude": 0.0,
        "texture_scale_px": 16.0,
        "noise_sigma": 30.0,
    },
    "objects": [
        {
            "shape": "rectangle",
            "size_m": [18.0, 9.0],
            "reflectance": 22000.0,
            "position_m": [180.0, 200.0],
            "velocity_mps": [0.0, 0.0],
            "altitude_m": 0.0,
            "orientation_deg": 0.0,
        }
    ],
    "acquisition": {
        "block_phase_m": 150.0,
        "overlap_policy": "latest",
        "satellite_altitude_m": 500000.0,
    },
    "seed": 77,
    "supersample": 2,
}


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture(scope="module")
def report_path(mover_detections, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli-report") / "detections.json"
    write_report(detection_report(mover_detections), path)
    return path


# ---------------------------------------------------------------------------
# timing


def test_timing_default_text(capsys):
    assert main(["timing"]) == 0
    out = capsys.readouterr().out
    assert "inter-strip delay     0.396278 s" in out
    assert "ground speed          7026.9 m/s" in out
    assert "frame ground advance  1194.6 m" in out
    assert "adjacent-pair offsets:" in out


def test_timing_json_payload(capsys):
    code, payload = run_json(capsys, ["timing", "--json"])
    assert code == 0
    assert payload["kind"] == "timing"
    assert payload["dt_color_s"] == pytest.approx(0.39627761924717453, abs=1e-12)
    assert payload["ground_speed_mps"] == pytest.approx(7026.891918070021, abs=1e-9)
    assert payload["frame_advance_m"] == pytest.approx(1194.5716260719037, abs=1e-9)
    assert payload["strip_ground_extent_m"] == pytest.approx(2784.6)
    assert [o["slots"] for o in payload["pair_offsets"]] == [7, -2, -1, -1, 3, -4, -1]
    for o in payload["pair_offsets"]:
        assert o["offset_s"] == pytest.approx(o["slots"] * payload["dt_color_s"])


def test_timing_gsd_override(capsys):
    code, payload = run_json(capsys, ["timing", "--json", "--gsd", "4.0"])
    assert code == 0
    assert payload["dt_color_s"] == pytest.approx(0.3774072564258805, abs=1e-12)


def test_timing_rejects_bad_gsd(capsys):
    assert main(["timing", "--gsd", "-1"]) == 2
    assert "GSD must be positive" in capsys.readouterr().err


def test_timing_mean_motion_flag(capsys):
    code, payload = run_json(capsys, ["timing", "--json", "--mean-motion", "14.19"])
    assert code == 0
    orbit = OrbitSpec(
        mean_motion=14.19,
        earth_radius_km=DEFAULT_ORBIT.earth_radius_km,
        time_fractional_error=DEFAULT_ORBIT.time_fractional_error,
    )
    assert payload["dt_color_s"] == pytest.approx(
        delta_t_color(DEFAULT_SENSOR, orbit), abs=1e-12
    )
    assert payload["mean_motion_rev_per_day"] == 14.19


def test_timing_tle_sets_mean_motion(capsys, tmp_path):
    tle = tmp_path / "flock.tle"
    tle.write_text("\n".join(FLOCK_TLE) + "\n", encoding="ascii")
    code, payload = run_json(capsys, ["timing", "--json", "--tle", str(tle)])
    assert code == 0
    assert payload["mean_motion_rev_per_day"] == pytest.approx(15.15)
    orbit = OrbitSpec(
        mean_motion=15.15,
        earth_radius_km=DEFAULT_ORBIT.earth_radius_km,
        time_fractional_error=DEFAULT_ORBIT.time_fractional_error,
    )
    assert payload["dt_color_s"] == pytest.approx(
        delta_t_color(DEFAULT_SENSOR, orbit), abs=1e-12
    )


def test_timing_tle_bad_checksum(capsys, tmp_path):
    corrupt = FLOCK_TLE[0][:-1] + "3"
    tle = tmp_path / "bad.tle"
    tle.write_text(corrupt + "\n" + FLOCK_TLE[1] + "\n", encoding="ascii")
    assert main(["timing", "--tle", str(tle)]) == 4
    assert "bad TLE" in capsys.readouterr().err


def test_timing_tle_missing_file(capsys, tmp_path):
    assert main(["timing", "--tle", str(tmp_path / "nope.tle")]) == 3
    assert "cannot read TLE file" in capsys.readouterr().err


def test_timing_tle_single_line(capsys, tmp_path):
    tle = tmp_path / "short.tle"
    tle.write_text(FLOCK_TLE[0] + "\n", encoding="ascii")
    assert main(["timing", "--tle", str(tle)]) == 4
    assert "two element lines" in capsys.readouterr().err


def test_timing_manifest_source(capsys, scene_manifest):
    code, payload = run_json(
        capsys, ["timing", "--json", "--manifest", str(scene_manifest)]
    )
    assert code == 0
    assert payload["gsd_m"] == pytest.approx(DEFAULT_SENSOR.gsd_m)


def test_timing_manifest_missing(capsys, tmp_path):
    assert main(["timing", "--manifest", str(tmp_path / "gone.json")]) == 3
    assert "manifest not found" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("bandtrack ")


def test_no_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# simulate


def test_simulate_requires_a_source(capsys):
    assert main(["simulate"]) == 2
    assert "either --script or --demo is required" in capsys.readouterr().err


def test_simulate_demo(capsys, tmp_path):
    code, payload = run_json(
        capsys, ["simulate", "--demo", "--json", "--out", str(tmp_path)]
    )
    assert code == 0
    assert payload["kind"] == "simulate-summary"
    assert payload["scene_id"] == "demo-0001"
    assert payload["n_objects"] == 2
    assert payload["objects"][0]["n_visible"] == 8
    assert (tmp_path / "manifest.json").exists()
    assert sorted(p.name for p in tmp_path.glob("*.pgm")) == [
        "B.pgm", "CB.pgm", "G1.pgm", "G2.pgm",
        "NIR.pgm", "R.pgm", "RE.pgm", "Y.pgm",
    ]


def test_simulate_script_file(capsys, tmp_path):
    script = tmp_path / "scene.json"
    script.write_text(json.dumps(SMALL_SCRIPT), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["simulate", "--script", str(script), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "wrote %s" % (out / "manifest.json",) in text
    assert "object 0:" in text
    assert (out / "truth.json").exists()
    assert (out / "row_times.json").exists()


def test_simulate_png_format(tmp_path, capsys):
    script = tmp_path / "scene.json"
    script.write_text(json.dumps(SMALL_SCRIPT), encoding="utf-8")
    out = tmp_path / "out"
    argv = ["simulate", "--script", str(script), "--out", str(out), "--format", "png"]
    assert main(argv) == 0
    capsys.readouterr()
    assert len(list(out.glob("*.png"))) == 8
    assert not list(out.glob("*.pgm"))


def test_simulate_missing_script(capsys, tmp_path):
    assert main(["simulate", "--script", str(tmp_path / "gone.json")]) == 3
    assert "cannot read script" in capsys.readouterr().err


def test_simulate_invalid_json_reports_line(capsys, tmp_path):
    script = tmp_path / "broken.json"
    script.write_text('{\n  "scene": {,\n}\n', encoding="utf-8")
    assert main(["simulate", "--script", str(script)]) == 4
    assert "line 2" in capsys.readouterr().err


def test_simulate_schema_error(capsys, tmp_path):
    script = tmp_path / "empty.json"
    script.write_text("{}", encoding="utf-8")
    assert main(["simulate", "--script", str(script)]) == 4
    assert "$.scene" in capsys.readouterr().err


def test_simulate_seed_override(tmp_path, capsys):
    script = tmp_path / "scene.json"
    script.write_text(json.dumps(SMALL_SCRIPT), encoding="utf-8")
    outs = {}
    for name, seed in (("a", "1"), ("b", "2"), ("c", "1")):
        out = tmp_path / name
        argv = ["simulate", "--script", str(script), "--out", str(out), "--seed", seed]
        assert main(argv) == 0
        outs[name] = (out / "B.pgm").read_bytes()
    capsys.readouterr()
    assert outs["a"] != outs["b"]
    assert outs["a"] == outs["c"]


def test_out_dir_env_fallback(tmp_path, capsys, monkeypatch):
    script = tmp_path / "scene.json"
    script.write_text(json.dumps(SMALL_SCRIPT), encoding="utf-8")
    target = tmp_path / "env-out"
    monkeypatch.setenv("BANDTRACK_OUT", str(target))
    assert main(["simulate", "--script", str(script)]) == 0
    capsys.readouterr()
    assert (target / "manifest.json").exists()


# ---------------------------------------------------------------------------
# detect


def test_detect_full_run(capsys, scene_manifest, tmp_path, mover_sim):
    argv = [
        "detect",
        "--manifest", str(scene_manifest),
        "--out", str(tmp_path),
        "--workers", "2",
        "--figures",
        "--dump-rasters",
        "--json",
    ]
    code, payload = run_json(capsys, argv)
    assert code == 0
    assert payload["kind"] == "detect-summary"
    assert payload["n_tracks"] == 1
    assert payload["n_pair_detections"] == 7
    report = json.loads((tmp_path / "detections.json").read_text(encoding="utf-8"))
    assert report["kind"] == "detection-report"
    assert report["scene_id"] == mover_sim.scene.scene_id
    assert len(report["tracks"]) == 1
    assert (tmp_path / "composite.png").stat().st_size > 0
    assert (tmp_path / "differences.png").stat().st_size > 0
    dumped = sorted(p.name for p in tmp_path.glob("diff_*.pgm"))
    assert len(dumped) == 14
    assert "diff_CB_B.pgm" in dumped
    assert "diff_CB_B_thresholded.pgm" in dumped


def test_detect_text_summary(capsys, scene_manifest, tmp_path):
    argv = [
        "detect",
        "--manifest", str(scene_manifest),
        "--out", str(tmp_path),
        "--workers", "2",
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "wrote %s" % (tmp_path / "detections.json",) in out
    assert "7 pair detections, 1 tracks" in out


def test_detect_missing_manifest(capsys, tmp_path):
    assert main(["detect", "--manifest", str(tmp_path / "gone.json")]) == 3
    assert "manifest not found" in capsys.readouterr().err


def test_detect_corrupt_manifest(capsys, tmp_path):
    bad = tmp_path / "manifest.json"
    bad.write_text("{ not json", encoding="utf-8")
    assert main(["detect", "--manifest", str(bad)]) == 4
    assert "not valid JSON" in capsys.readouterr().err


def test_detect_rejects_bad_config(capsys, scene_manifest):
    argv = ["detect", "--manifest", str(scene_manifest), "--percentile", "1.5"]
    assert main(argv) == 2
    assert "bad detection config" in capsys.readouterr().err


def test_detect_requires_manifest_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["detect"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# analyze


def test_analyze_velocity_output(capsys, report_path, tmp_path):
    argv = ["analyze", "--report", str(report_path), "--out", str(tmp_path)]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "wrote %s" % (tmp_path / "analysis.json",) in out
    assert "track 0:" in out
    report = json.loads((tmp_path / "analysis.json").read_text(encoding="utf-8"))
    assert report["kind"] == "analysis-report"
    track = report["tracks"][0]
    assert track["speed_mps"] == pytest.approx(120.0, abs=2.0)
    assert np.degrees(0.6) == pytest.approx(track["heading_deg"], abs=2.0)
    assert track["adjustments_s"] == [0.0] * 7


def test_analyze_json_payload(capsys, report_path, tmp_path):
    argv = [
        "analyze", "--report", str(report_path), "--out", str(tmp_path), "--json",
    ]
    code, payload = run_json(capsys, argv)
    assert code == 0
    assert payload["kind"] == "analysis-report"
    assert payload["report"] == str(tmp_path / "analysis.json")


def test_analyze_altitude_block(capsys, report_path, tmp_path):
    argv = [
        "analyze",
        "--report", str(report_path),
        "--out", str(tmp_path),
        "--satellite-altitude-km", "500",
        "--heading-deg", "%.6f" % np.degrees(0.6),
    ]
    assert main(argv) == 0
    capsys.readouterr()
    report = json.loads((tmp_path / "analysis.json").read_text(encoding="utf-8"))
    track = report["tracks"][0]
    assert "altitude" in track
    # Ground mover: parallax-free speed must match the apparent one.
    assert track["altitude"]["true_speed_mps"] == pytest.approx(
        track["speed_mps"], abs=5.0
    )


def test_analyze_ambiguity_csv(capsys, report_path, tmp_path):
    csv_path = tmp_path / "curve.csv"
    argv = [
        "analyze",
        "--report", str(report_path),
        "--out", str(tmp_path),
        "--ambiguity-csv", str(csv_path),
    ]
    assert main(argv) == 0
    capsys.readouterr()
    lines = csv_path.read_text(encoding="ascii").splitlines()
    assert lines[0] == "altitude_m,apparent_speed_mps"
    assert lines[1] == "0.000000,0.000000"


def test_analyze_figures(capsys, report_path, tmp_path):
    argv = [
        "analyze",
        "--report", str(report_path),
        "--out", str(tmp_path),
        "--figures",
    ]
    assert main(argv) == 0
    capsys.readouterr()
    assert (tmp_path / "velocities.png").stat().st_size > 0
    assert (tmp_path / "ambiguity.png").stat().st_size > 0


def test_analyze_empty_report(capsys, report_path, tmp_path):
    report = json.loads(report_path.read_text(encoding="utf-8"))
    report["tracks"] = []
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps(report), encoding="utf-8")
    argv = ["analyze", "--report", str(empty), "--out", str(tmp_path)]
    assert main(argv) == 0
    assert "no tracks" in capsys.readouterr().out
    payload = json.loads((tmp_path / "analysis.json").read_text(encoding="utf-8"))
    assert payload["tracks"] == []


def test_analyze_missing_report(capsys, tmp_path):
    assert main(["analyze", "--report", str(tmp_path / "gone.json")]) == 3
    assert "report not found" in capsys.readouterr().err


def test_analyze_invalid_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["analyze", "--report", str(bad)]) == 4
    assert "not valid JSON" in capsys.readouterr().err


def test_analyze_wrong_kind(capsys, tmp_path):
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"kind": "timing"}), encoding="utf-8")
    assert main(["analyze", "--report", str(other)]) == 4
    assert "expected a detection-report" in capsys.readouterr().err


def test_analyze_malformed_tracks(capsys, report_path, tmp_path):
    report = json.loads(report_path.read_text(encoding="utf-8"))
    del report["tracks"][0]["samples"]
    bad = tmp_path / "mangled.json"
    bad.write_text(json.dumps(report), encoding="utf-8")
    assert main(["analyze", "--report", str(bad)]) == 4
    assert "malformed" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# installed entry points


def test_module_execution():
    proc = subprocess.run(
        [sys.executable, "-m", "bandtrack", "timing", "--json"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["kind"] == "timing"
