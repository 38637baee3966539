"""End-to-end wiring: scene -> band differences -> blobs -> tracks -> velocities.

The per-pair work (difference, threshold, blob extraction, pairing) is
independent across the seven spectral-adjacent pairs, so it fans out over a
thread pool; results are merged back in fixed pair order to keep every run
deterministic regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .detect import (
    BandImage,
    MultiBandScene,
    PairingResult,
    Track,
    difference,
    extract_blobs,
    link_track,
    normalize_band,
    pair_blobs,
    shared_threshold_level,
    spectral_adjacent_pairs,
    threshold,
    threshold_level,
)
from .imaging import delta_t_color
from .kinematics import (
    HeadingAmbiguityError,
    VelocityEstimate,
    estimate_track_velocity,
    resolve_altitude,
)


@dataclass(frozen=True)
class DetectConfig:
    """Knobs for the detection stage; defaults suit simulator scenes."""

    percentile: float = 0.95
    threshold_mode: str = "percentile"
    shared_threshold: bool = False
    min_area_px: int = 3
    max_speed_mps: float = 400.0
    gate_px: float = 3.0
    bright_objects: bool = True
    pixel_sigma_px: float = 1.0
    workers: int = 4

    def __post_init__(self):
        if not (0.0 < self.percentile < 1.0):
            raise ValueError("percentile must be in (0, 1)")
        if self.threshold_mode not in ("percentile", "peak"):
            raise ValueError("threshold_mode must be 'percentile' or 'peak'")
        if self.min_area_px < 1:
            raise ValueError("min_area_px must be >= 1")
        if self.max_speed_mps <= 0 or self.gate_px <= 0:
            raise ValueError("max_speed_mps and gate_px must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DetectConfig":
        return cls(**data)


@dataclass(frozen=True)
class PairDetections:
    """Everything the pipeline derived from one spectral-adjacent pair."""

    minuend: str
    subtrahend: str
    slot_gap: int
    threshold_level: float
    n_positive: int
    n_negative: int
    pairing: PairingResult


@dataclass(frozen=True)
class SceneDetections:
    scene_id: str | None
    grid_spacing_m: float
    dt_color_s: float
    frame_interval_s: float
    config: DetectConfig
    pairs: tuple
    tracks: tuple

    @property
    def detections_by_pair(self) -> list:
        return [list(p.pairing.pairs) for p in self.pairs]


def detect_scene(scene: MultiBandScene, config: DetectConfig | None = None) -> SceneDetections:
    """Run the full detection stage on one loaded scene."""
    cfg = config or DetectConfig()
    layout = scene.layout
    grid = scene.grid_spacing_m
    dt_color = delta_t_color(scene.sensor, scene.orbit)
    frame_s = scene.sensor.frame_interval_s
    pairs = spectral_adjacent_pairs(layout)

    normalized = {
        name: BandImage(
            name=name,
            values=normalize_band(img.values),
            grid_spacing_m=grid,
        )
        for name, img in scene.bands.items()
    }

    def make_diff(pair):
        bluer, redder = pair
        return difference(normalized[bluer], normalized[redder], already_normalized=True)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        diffs = list(pool.map(make_diff, pairs))

        if cfg.shared_threshold:
            level = shared_threshold_level(diffs, cfg.percentile, cfg.threshold_mode)
            levels = [level] * len(diffs)
        else:
            levels = list(
                pool.map(
                    lambda d: threshold_level(d.values, cfg.percentile, cfg.threshold_mode),
                    diffs,
                )
            )

        def finish(args):
            (bluer, redder), diff, level = args
            gap = abs(layout.position(bluer) - layout.position(redder))
            th = threshold(diff, level=level)
            blobs = extract_blobs(th, min_area=cfg.min_area_px)
            # One mosaic-seam crossing can stretch the pair delay by a frame.
            max_disp_px = cfg.max_speed_mps * (gap * dt_color + frame_s) / grid
            pairing = pair_blobs(
                blobs,
                max_displacement_px=max_disp_px,
                minuend=bluer,
                subtrahend=redder,
                grid_spacing_m=grid,
            )
            n_pos = sum(1 for b in blobs if b.polarity > 0)
            return PairDetections(
                minuend=bluer,
                subtrahend=redder,
                slot_gap=gap,
                threshold_level=level,
                n_positive=n_pos,
                n_negative=len(blobs) - n_pos,
                pairing=pairing,
            )

        pair_results = list(pool.map(finish, zip(pairs, diffs, levels)))

    tracks = link_track(
        [list(p.pairing.pairs) for p in pair_results],
        layout,
        grid_spacing_m=grid,
        gate_px=cfg.gate_px,
        bright_objects=cfg.bright_objects,
    )
    return SceneDetections(
        scene_id=scene.scene_id,
        grid_spacing_m=grid,
        dt_color_s=dt_color,
        frame_interval_s=frame_s,
        config=cfg,
        pairs=tuple(pair_results),
        tracks=tuple(tracks),
    )


@dataclass(frozen=True)
class TrackAnalysis:
    track: Track
    estimate: VelocityEstimate
    heading_rad: float
    altitude: object = None
    altitude_error: str | None = None


def analyze_tracks(
    detections: SceneDetections,
    time_fraction: float = 0.002,
    satellite_altitude_m: float | None = None,
    assumed_heading_rad: float | None = None,
    ground_speed_mps: float | None = None,
    min_heading_angle_deg: float = 5.0,
) -> list:
    """Velocity estimates (and optional altitude resolution) per track.

    Altitude resolution runs only when both ``satellite_altitude_m`` and an
    ``assumed_heading_rad`` for the true motion are given, since the parallax
    decomposition needs a heading hypothesis independent of the apparent
    displacement direction.
    """
    results = []
    for track in detections.tracks:
        est = estimate_track_velocity(
            track.positions_by_strip(),
            dt_color=detections.dt_color_s,
            dt_camera=detections.frame_interval_s,
            grid_spacing_m=detections.grid_spacing_m,
            pixel_sigma=detections.config.pixel_sigma_px,
            time_fraction=time_fraction,
        )
        vx, vy = est.mean_velocity_mps
        heading = math.atan2(vy, vx) if (vx, vy) != (0.0, 0.0) else 0.0

        altitude = None
        alt_err = None
        if satellite_altitude_m is not None and assumed_heading_rad is not None:
            if ground_speed_mps is None:
                raise ValueError("altitude resolution needs the satellite ground speed")
            try:
                altitude = resolve_altitude(
                    apparent_velocity_mps=np.asarray(est.mean_velocity_mps),
                    heading=np.array(
                        [math.cos(assumed_heading_rad), math.sin(assumed_heading_rad)]
                    ),
                    track_axis=np.array([0.0, 1.0]),
                    h_sat_m=satellite_altitude_m,
                    ground_speed_mps=ground_speed_mps,
                    heading_sigma_rad=0.0,
                    min_angle_deg=min_heading_angle_deg,
                )
            except HeadingAmbiguityError as exc:
                alt_err = str(exc)
        results.append(
            TrackAnalysis(
                track=track,
                estimate=est,
                heading_rad=heading,
                altitude=altitude,
                altitude_error=alt_err,
            )
        )
    return results


# ---------------------------------------------------------------------------
# Report payloads (serialized by sceneio.write_report)


def detection_report(detections: SceneDetections) -> dict:
    pairs = []
    for p in detections.pairs:
        dets = []
        for d in p.pairing.pairs:
            dets.append(
                {
                    "positive_px": [d.positive.centroid_px[0], d.positive.centroid_px[1]],
                    "negative_px": [d.negative.centroid_px[0], d.negative.centroid_px[1]],
                    "displacement_px": list(d.displacement_px),
                    "displacement_m": list(d.displacement_m),
                    "area_px": [d.positive.area_px, d.negative.area_px],
                    "peak": [d.positive.peak, d.negative.peak],
                }
            )
        pairs.append(
            {
                "minuend": p.minuend,
                "subtrahend": p.subtrahend,
                "slot_gap": p.slot_gap,
                "threshold_level": p.threshold_level,
                "n_positive_blobs": p.n_positive,
                "n_negative_blobs": p.n_negative,
                "n_unmatched": len(p.pairing.unmatched),
                "detections": dets,
            }
        )
    tracks = []
    for t in detections.tracks:
        tracks.append(
            {
                "n_pairs": t.n_pairs,
                "ambiguous": t.ambiguous,
                "bridged": t.bridged,
                "samples": [
                    {
                        "band": s.band,
                        "strip_position": s.strip_position,
                        "x_m": s.x_m,
                        "y_m": s.y_m,
                        "n_sources": s.n_sources,
                    }
                    for s in t.samples
                ],
            }
        )
    return {
        "kind": "detection-report",
        "scene_id": detections.scene_id,
        "grid_spacing_m": detections.grid_spacing_m,
        "dt_color_s": detections.dt_color_s,
        "frame_interval_s": detections.frame_interval_s,
        "config": detections.config.to_dict(),
        "pairs": pairs,
        "tracks": tracks,
    }


def analysis_report(detections: SceneDetections, analyses: list) -> dict:
    tracks = []
    for i, a in enumerate(analyses):
        est = a.estimate
        entry = {
            "track_index": i,
            "n_samples": len(a.track.samples),
            "mean_velocity_mps": list(est.mean_velocity_mps),
            "speed_mps": est.speed_mps,
            "sigma_v_mps": est.sigma_v_mps,
            "sigma_accel_mps2": est.sigma_accel_mps2,
            "heading_deg": math.degrees(a.heading_rad),
            "adjustments_s": list(est.adjustments_s),
            "speed_sequence_mps": [
                None if v is None else float(np.hypot(*v)) for v in est.velocities_mps
            ],
            "naive_speed_sequence_mps": _naive_speeds(a.track, detections.dt_color_s),
            "rms_accel_mps2": est.rms_accel_mps2,
            "low_confidence": est.low_confidence,
            "ambiguous": a.track.ambiguous,
            "bridged": a.track.bridged,
        }
        if a.altitude is not None:
            entry["altitude"] = {
                "altitude_m": a.altitude.altitude_m,
                "true_speed_mps": a.altitude.true_speed_mps,
                "parallax_speed_mps": a.altitude.parallax_speed_mps,
                "altitude_sigma_m": a.altitude.altitude_sigma_m,
            }
        if a.altitude_error is not None:
            entry["altitude_error"] = a.altitude_error
        tracks.append(entry)
    return {
        "kind": "analysis-report",
        "scene_id": detections.scene_id,
        "grid_spacing_m": detections.grid_spacing_m,
        "dt_color_s": detections.dt_color_s,
        "frame_interval_s": detections.frame_interval_s,
        "config": detections.config.to_dict(),
        "tracks": tracks,
    }


def _naive_speeds(track: Track, dt_color: float) -> list:
    by_strip = track.positions_by_strip()
    out = []
    n = max(by_strip) + 1 if by_strip else 0
    for i in range(max(n - 1, 0)):
        a, b = by_strip.get(i), by_strip.get(i + 1)
        if a is None or b is None:
            out.append(None)
        else:
            out.append(float(math.hypot(b[0] - a[0], b[1] - a[1])) / dt_color)
    return out
