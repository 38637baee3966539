"""Moving-object detection in multi-band push-broom mosaics.

The bands of a frame-mosaic multispectral image are exposed at slightly
different times, so anything moving on the ground shows up displaced between
bands.  This package models the acquisition timing, detects movers through
band differencing, estimates their velocity with mosaic-seam corrections and
error propagation, and simulates synthetic acquisitions to validate the whole
chain end to end.
"""

from .imaging import (
    DEFAULT_LAYOUT,
    DEFAULT_ORBIT,
    DEFAULT_SENSOR,
    Band,
    BandLayout,
    OrbitSpec,
    SensorSpec,
    band_time_offset,
    delta_t_color,
    frame_ground_advance,
    ground_speed,
    strip_ground_extent,
)
from .detect import (
    BandImage,
    Blob,
    DetectionPair,
    DiffImage,
    MultiBandScene,
    Track,
    TrackSample,
    difference,
    extract_blobs,
    link_track,
    normalize_band,
    pair_blobs,
    spectral_adjacent_pairs,
    threshold,
    threshold_level,
)
from .kinematics import (
    ACCELERATION_ERROR_FACTOR,
    AltitudeSolution,
    AmbiguityCurve,
    HeadingAmbiguityError,
    VelocityEstimate,
    ambiguity_curve,
    apparent_speed_stationary,
    estimate_track_velocity,
    resolve_altitude,
    select_adjustments,
    velocity,
    velocity_error,
)
from .simulate import (
    Background,
    ObjectScript,
    RowTimeMap,
    SceneScript,
    ScriptError,
    SimulationResult,
    acquisition_frame,
    row_time,
    script_from_dict,
    script_to_dict,
    simulate,
)
from .pipeline import (
    DetectConfig,
    SceneDetections,
    analyze_tracks,
    detect_scene,
)
from .scenarios import (
    crossing_mover_script,
    place_no_crossing,
    place_one_crossing,
    single_mover_script,
)
from .sceneio import (
    TleChecksumError,
    TleError,
    TleRecord,
    load_scene,
    parse_scene_id,
    parse_tle,
    write_report,
    write_scene,
)

__version__ = "0.1.0"

__all__ = [
    "ACCELERATION_ERROR_FACTOR",
    "AltitudeSolution",
    "AmbiguityCurve",
    "Background",
    "Band",
    "BandImage",
    "BandLayout",
    "Blob",
    "DEFAULT_LAYOUT",
    "DEFAULT_ORBIT",
    "DEFAULT_SENSOR",
    "DetectConfig",
    "DetectionPair",
    "DiffImage",
    "HeadingAmbiguityError",
    "MultiBandScene",
    "ObjectScript",
    "OrbitSpec",
    "RowTimeMap",
    "SceneDetections",
    "SceneScript",
    "ScriptError",
    "SensorSpec",
    "SimulationResult",
    "TleChecksumError",
    "TleError",
    "TleRecord",
    "Track",
    "TrackSample",
    "VelocityEstimate",
    "acquisition_frame",
    "ambiguity_curve",
    "analyze_tracks",
    "apparent_speed_stationary",
    "band_time_offset",
    "crossing_mover_script",
    "delta_t_color",
    "detect_scene",
    "difference",
    "estimate_track_velocity",
    "extract_blobs",
    "frame_ground_advance",
    "ground_speed",
    "link_track",
    "load_scene",
    "normalize_band",
    "pair_blobs",
    "parse_scene_id",
    "parse_tle",
    "place_no_crossing",
    "place_one_crossing",
    "resolve_altitude",
    "row_time",
    "script_from_dict",
    "script_to_dict",
    "select_adjustments",
    "simulate",
    "single_mover_script",
    "spectral_adjacent_pairs",
    "strip_ground_extent",
    "threshold",
    "threshold_level",
    "velocity",
    "velocity_error",
    "write_report",
    "write_scene",
]
