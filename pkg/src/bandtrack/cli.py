"""Command-line interface: timing, simulate, detect, analyze.

Exit codes: 0 success, 2 usage error, 3 missing/unreadable input,
4 schema/format error, 5 processing error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .imaging import (
    DEFAULT_LAYOUT,
    DEFAULT_ORBIT,
    DEFAULT_SENSOR,
    OrbitSpec,
    SensorSpec,
    band_time_offset,
    delta_t_color,
    frame_ground_advance,
    ground_speed,
    strip_ground_extent,
)
from .kinematics import ambiguity_curve
from .pipeline import (
    DetectConfig,
    SceneDetections,
    analyze_tracks,
    analysis_report,
    detect_scene,
    detection_report,
)
from .sceneio import (
    DimensionMismatchError,
    ManifestError,
    RasterError,
    SceneIOError,
    load_manifest,
    load_report,
    load_scene,
    parse_tle,
    write_raster,
    write_report,
    write_scene,
    TleError,
)
from .simulate import ScriptError, script_from_dict, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_SCHEMA = 4
EXIT_PROCESSING = 5

OUT_DIR_ENV = "BANDTRACK_OUT"


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fail(message: str, code: int):
    raise _CliError(message, code)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(payload: dict, args, default_lines) -> None:
    if args.json:
        json.dump(payload, sys.stdout, sort_keys=True, indent=2)
        sys.stdout.write("\n")
    else:
        for line in default_lines:
            print(line)


# ---------------------------------------------------------------------------
# timing


def _timing_specs(args) -> tuple:
    sensor = DEFAULT_SENSOR
    orbit = DEFAULT_ORBIT
    if args.manifest:
        data = _load_manifest_checked(args.manifest)
        from .sceneio import _orbit_from_dict, _sensor_from_dict

        try:
            sensor = _sensor_from_dict(data["sensor"])
            orbit = _orbit_from_dict(data["orbit"])
        except (KeyError, TypeError, ValueError) as exc:
            _fail("manifest lacks usable sensor/orbit: %s" % (exc,), EXIT_SCHEMA)
    mean_motion = orbit.mean_motion
    if args.tle:
        try:
            lines = [
                ln
                for ln in Path(args.tle).read_text(encoding="ascii").splitlines()
                if ln.strip()
            ]
        except OSError as exc:
            _fail("cannot read TLE file: %s" % (exc,), EXIT_INPUT)
        if len(lines) < 2:
            _fail("TLE file must hold two element lines", EXIT_SCHEMA)
        try:
            record = parse_tle(lines[0], lines[1])
        except TleError as exc:
            _fail("bad TLE: %s" % (exc,), EXIT_SCHEMA)
        mean_motion = record.mean_motion
    if args.mean_motion is not None:
        mean_motion = args.mean_motion
    if mean_motion != orbit.mean_motion:
        orbit = OrbitSpec(
            mean_motion=mean_motion,
            earth_radius_km=orbit.earth_radius_km,
            time_fractional_error=orbit.time_fractional_error,
        )

    overrides = {}
    if args.gsd is not None:
        if args.gsd <= 0:
            _fail("GSD must be positive", EXIT_USAGE)
        overrides["gsd_m"] = args.gsd
    if args.strip_width is not None:
        overrides["strip_width_px"] = args.strip_width
    if args.frame_interval is not None:
        overrides["frame_interval_s"] = args.frame_interval
    if overrides:
        try:
            sensor = SensorSpec(
                pixels_x=sensor.pixels_x,
                pixels_y=sensor.pixels_y,
                strip_width_px=overrides.get("strip_width_px", sensor.strip_width_px),
                n_strips=sensor.n_strips,
                pixel_pitch_um=sensor.pixel_pitch_um,
                frame_interval_s=overrides.get("frame_interval_s", sensor.frame_interval_s),
                gsd_m=overrides.get("gsd_m", sensor.gsd_m),
            )
        except ValueError as exc:
            _fail("invalid sensor parameters: %s" % (exc,), EXIT_USAGE)
    return sensor, orbit


def cmd_timing(args) -> int:
    sensor, orbit = _timing_specs(args)
    try:
        dt = delta_t_color(sensor, orbit)
    except ValueError as exc:
        _fail(str(exc), EXIT_USAGE)
    speed = ground_speed(orbit)
    extent = strip_ground_extent(sensor)
    advance = frame_ground_advance(sensor, orbit)
    layout = DEFAULT_LAYOUT
    offsets = []
    order = layout.spectral_order()
    for bluer, redder in zip(order, order[1:]):
        offsets.append(
            {
                "pair": "%s-%s" % (bluer, redder),
                "slots": layout.position(bluer) - layout.position(redder),
                "offset_s": band_time_offset(layout, redder, bluer, dt),
            }
        )
    payload = {
        "kind": "timing",
        "dt_color_s": dt,
        "ground_speed_mps": speed,
        "strip_ground_extent_m": extent,
        "frame_advance_m": advance,
        "frame_interval_s": sensor.frame_interval_s,
        "mean_motion_rev_per_day": orbit.mean_motion,
        "gsd_m": sensor.gsd_m,
        "strip_width_px": sensor.strip_width_px,
        "pair_offsets": offsets,
    }
    lines = [
        "inter-strip delay     %0.6f s" % (dt,),
        "ground speed          %0.1f m/s" % (speed,),
        "strip ground extent   %0.1f m" % (extent,),
        "frame ground advance  %0.1f m" % (advance,),
        "frame interval        %0.3f s" % (sensor.frame_interval_s,),
        "adjacent-pair offsets:",
    ]
    for o in offsets:
        lines.append(
            "  %-8s %+d slots  %+0.6f s" % (o["pair"], o["slots"], o["offset_s"])
        )
    _emit(payload, args, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _demo_script_text() -> str:
    return (
        resources.files("bandtrack").joinpath("data/demo_scene.json").read_text("utf-8")
    )


def cmd_simulate(args) -> int:
    if args.demo:
        text = _demo_script_text()
        source = "<demo>"
    else:
        if not args.script:
            _fail("either --script or --demo is required", EXIT_USAGE)
        try:
            text = Path(args.script).read_text(encoding="utf-8")
        except OSError as exc:
            _fail("cannot read script: %s" % (exc,), EXIT_INPUT)
        source = args.script
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail("script %s is not valid JSON: line %d: %s" % (source, exc.lineno, exc.msg), EXIT_SCHEMA)
    try:
        script = script_from_dict(data)
    except ScriptError as exc:
        _fail("script %s: %s" % (source, exc), EXIT_SCHEMA)
    if args.seed is not None:
        import dataclasses

        script = dataclasses.replace(script, seed=args.seed)

    result = simulate(script)
    out = _out_dir(args)
    manifest_path = write_scene(result, out, raster_format=args.format)
    truth = result.truth
    payload = {
        "kind": "simulate-summary",
        "manifest": str(manifest_path),
        "scene_id": result.scene.scene_id,
        "n_objects": len(truth),
        "objects": [
            {
                "index": t.index,
                "block_crossings": t.block_crossings,
                "any_clipped": t.any_clipped,
                "n_visible": sum(1 for s in t.samples if s.visible),
            }
            for t in truth
        ],
    }
    lines = ["wrote %s" % (manifest_path,)]
    for t in truth:
        lines.append(
            "object %d: %d/%d bands visible, %d crossings%s"
            % (
                t.index,
                sum(1 for s in t.samples if s.visible),
                len(t.samples),
                t.block_crossings,
                ", clipped" if t.any_clipped else "",
            )
        )
    _emit(payload, args, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# detect


def _load_manifest_checked(path):
    if not Path(path).exists():
        _fail("manifest not found: %s" % (path,), EXIT_INPUT)
    try:
        return load_manifest(path)
    except ManifestError as exc:
        _fail(str(exc), EXIT_SCHEMA)


def _load_scene_checked(path):
    _load_manifest_checked(path)
    try:
        return load_scene(path)
    except (ManifestError, DimensionMismatchError) as exc:
        _fail(str(exc), EXIT_SCHEMA)
    except RasterError as exc:
        _fail(str(exc), EXIT_INPUT)
    except SceneIOError as exc:
        _fail(str(exc), EXIT_PROCESSING)


def _detect_config(args) -> DetectConfig:
    try:
        return DetectConfig(
            percentile=args.percentile,
            threshold_mode=args.threshold_mode,
            shared_threshold=args.shared_threshold,
            min_area_px=args.min_area,
            max_speed_mps=args.max_speed,
            gate_px=args.gate,
            bright_objects=not args.dark_objects,
            pixel_sigma_px=args.pixel_sigma,
            workers=args.workers,
        )
    except ValueError as exc:
        _fail("bad detection config: %s" % (exc,), EXIT_USAGE)


def cmd_detect(args) -> int:
    scene = _load_scene_checked(args.manifest)
    cfg = _detect_config(args)
    try:
        detections = detect_scene(scene, cfg)
    except ValueError as exc:
        _fail("detection failed: %s" % (exc,), EXIT_PROCESSING)
    out = _out_dir(args)
    report = detection_report(detections)
    report_path = out / "detections.json"
    write_report(report, report_path)

    if args.dump_rasters:
        from .detect import BandImage, difference, normalize_band, threshold

        normalized = {
            n: BandImage(n, normalize_band(b.values), scene.grid_spacing_m)
            for n, b in scene.bands.items()
        }
        for p in detections.pairs:
            diff = difference(
                normalized[p.minuend], normalized[p.subtrahend], already_normalized=True
            )
            th = threshold(diff, level=p.threshold_level)
            base = "diff_%s_%s" % (p.minuend, p.subtrahend)
            # Shift to unsigned: 32768 is the zero level of the scaled diff.
            scale = 1000.0
            for tag, values in (("", diff.values), ("_thresholded", th.values)):
                packed = np.clip(values * scale + 32768.0, 0, 65535)
                write_raster(out / ("%s%s.pgm" % (base, tag)), packed)

    if args.figures:
        from . import plots

        plots.composite_figure(scene, out / "composite.png")
        plots.difference_figure(scene, detections, out / "differences.png")

    n_dets = sum(len(p.pairing.pairs) for p in detections.pairs)
    payload = {
        "kind": "detect-summary",
        "report": str(report_path),
        "n_pair_detections": n_dets,
        "n_tracks": len(detections.tracks),
    }
    lines = [
        "wrote %s" % (report_path,),
        "%d pair detections, %d tracks" % (n_dets, len(detections.tracks)),
    ]
    _emit(payload, args, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def _detections_from_report(report: dict) -> SceneDetections:
    from .detect import Track, TrackSample

    try:
        tracks = []
        for t in report["tracks"]:
            samples = tuple(
                TrackSample(
                    band=s["band"],
                    strip_position=int(s["strip_position"]),
                    x_m=float(s["x_m"]),
                    y_m=float(s["y_m"]),
                    n_sources=int(s["n_sources"]),
                )
                for s in t["samples"]
            )
            tracks.append(
                Track(
                    samples=samples,
                    n_pairs=int(t["n_pairs"]),
                    ambiguous=bool(t["ambiguous"]),
                    bridged=bool(t["bridged"]),
                )
            )
        return SceneDetections(
            scene_id=report.get("scene_id"),
            grid_spacing_m=float(report["grid_spacing_m"]),
            dt_color_s=float(report["dt_color_s"]),
            frame_interval_s=float(report["frame_interval_s"]),
            config=DetectConfig.from_dict(report["config"]),
            pairs=(),
            tracks=tuple(tracks),
        )
    except (KeyError, TypeError, ValueError) as exc:
        _fail("detection report is malformed: %s" % (exc,), EXIT_SCHEMA)


def cmd_analyze(args) -> int:
    if not Path(args.report).exists():
        _fail("report not found: %s" % (args.report,), EXIT_INPUT)
    try:
        report = load_report(args.report)
    except json.JSONDecodeError as exc:
        _fail("report is not valid JSON: %s" % (exc,), EXIT_SCHEMA)
    except OSError as exc:
        _fail("cannot read report: %s" % (exc,), EXIT_INPUT)
    if not isinstance(report, dict) or report.get("kind") != "detection-report":
        _fail("expected a detection-report JSON document", EXIT_SCHEMA)
    detections = _detections_from_report(report)

    heading_rad = math.radians(args.heading_deg) if args.heading_deg is not None else None
    sat_alt_m = args.satellite_altitude_km * 1000.0 if args.satellite_altitude_km else None
    orbit = DEFAULT_ORBIT
    try:
        analyses = analyze_tracks(
            detections,
            time_fraction=orbit.time_fractional_error,
            satellite_altitude_m=sat_alt_m,
            assumed_heading_rad=heading_rad,
            ground_speed_mps=ground_speed(orbit) if sat_alt_m is not None else None,
        )
    except ValueError as exc:
        _fail("analysis failed: %s" % (exc,), EXIT_PROCESSING)

    out = _out_dir(args)
    payload = analysis_report(detections, analyses)
    report_path = out / "analysis.json"
    write_report(payload, report_path)

    curve = None
    if args.ambiguity_csv or args.figures:
        curve = ambiguity_curve(
            h_sat_m=sat_alt_m if sat_alt_m is not None else 500_000.0,
            ground_speed_mps=ground_speed(orbit),
        )
    if args.ambiguity_csv:
        Path(args.ambiguity_csv).write_text(curve.to_csv(), encoding="ascii")
    if args.figures:
        from . import plots

        if analyses:
            plots.velocity_figure(analyses, out / "velocities.png")
        plots.ambiguity_figure(curve, out / "ambiguity.png")

    lines = ["wrote %s" % (report_path,)]
    for i, a in enumerate(analyses):
        est = a.estimate
        desc = "track %d: %.1f +/- %.1f m/s, heading %.1f deg" % (
            i,
            est.speed_mps,
            est.sigma_v_mps,
            math.degrees(a.heading_rad),
        )
        if a.altitude is not None:
            desc += ", altitude %.0f m" % (a.altitude.altitude_m,)
        if est.low_confidence:
            desc += " (low confidence)"
        lines.append(desc)
    if not analyses:
        lines.append("no tracks")
    _emit({**payload, "report": str(report_path)}, args, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandtrack",
        description="Detect and analyze moving objects in multi-band push-broom mosaics.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("timing", help="print acquisition timing for sensor/orbit parameters")
    p.add_argument("--mean-motion", type=float, default=None, help="orbits per day")
    p.add_argument("--tle", help="two-line element file; sets mean motion")
    p.add_argument("--manifest", help="scene manifest supplying sensor/orbit")
    p.add_argument("--gsd", type=float, default=None, help="ground sample distance, m")
    p.add_argument("--strip-width", type=int, default=None, help="strip width, px")
    p.add_argument("--frame-interval", type=float, default=None, help="frame interval, s")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("simulate", help="render a scripted scene to rasters + manifest")
    p.add_argument("--script", help="scene script JSON path")
    p.add_argument("--demo", action="store_true", help="use the bundled demo script")
    p.add_argument("--seed", type=int, default=None, help="override script RNG seed")
    p.add_argument("--format", choices=("pgm", "png"), default="pgm", help="raster format")
    p.add_argument("--out", help="output directory (default $%s or .)" % OUT_DIR_ENV)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="find movers in a scene and write a report")
    p.add_argument("--manifest", required=True, help="scene manifest path")
    p.add_argument("--out", help="output directory (default $%s or .)" % OUT_DIR_ENV)
    p.add_argument("--percentile", type=float, default=0.95, help="threshold percentile")
    p.add_argument(
        "--threshold-mode",
        choices=("percentile", "peak"),
        default="percentile",
        help="threshold from the |diff| histogram or from its peak",
    )
    p.add_argument("--shared-threshold", action="store_true", help="one level for all pairs")
    p.add_argument("--min-area", type=int, default=3, help="min blob area, px")
    p.add_argument("--max-speed", type=float, default=400.0, help="pairing gate, m/s")
    p.add_argument("--gate", type=float, default=3.0, help="track linking gate, px")
    p.add_argument("--dark-objects", action="store_true", help="movers darker than background")
    p.add_argument("--pixel-sigma", type=float, default=1.0, help="centroid sigma, px")
    p.add_argument("--workers", type=int, default=4, help="worker threads")
    p.add_argument("--figures", action="store_true", help="write composite/difference figures")
    p.add_argument("--dump-rasters", action="store_true", help="write diff rasters as PGM")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("analyze", help="estimate velocities from a detection report")
    p.add_argument("--report", required=True, help="detection report JSON path")
    p.add_argument("--out", help="output directory (default $%s or .)" % OUT_DIR_ENV)
    p.add_argument(
        "--satellite-altitude-km", type=float, default=None, help="for altitude resolution"
    )
    p.add_argument(
        "--heading-deg",
        type=float,
        default=None,
        help="assumed true heading of the movers, for altitude resolution",
    )
    p.add_argument("--ambiguity-csv", help="write the altitude/apparent-speed curve CSV here")
    p.add_argument("--figures", action="store_true", help="write velocity/ambiguity figures")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print("error: %s" % (exc,), file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
