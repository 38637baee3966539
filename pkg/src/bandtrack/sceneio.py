"""Scene and report I/O: rasters, manifests, TLE lines, scene identifiers.

Rasters are single-channel 16-bit files (binary PGM or PNG) so scenes
round-trip bit-exactly with no geospatial toolchain.  Manifests and reports
are JSON with explicit units on physical fields and stable key ordering,
which keeps repeated runs byte-identical and diffable.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .detect import BandImage, MultiBandScene
from .imaging import Band, BandLayout, OrbitSpec, SensorSpec
from .simulate import RowTimeMap, SimulationResult, script_to_dict

MANIFEST_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

PGM_MAXVAL = 65535


class SceneIOError(Exception):
    """Base class for scene loading/saving failures."""


class ManifestError(SceneIOError):
    """Manifest file missing, unparsable, or structurally invalid."""


class MissingBandError(ManifestError):
    """A band required by the layout has no raster entry."""


class DimensionMismatchError(SceneIOError):
    """Band rasters do not share one shape."""


class RasterError(SceneIOError):
    """A raster file is missing or cannot be decoded."""


# ---------------------------------------------------------------------------
# Rasters


def write_pgm(path, values: np.ndarray) -> None:
    """Binary 16-bit PGM (P5, big-endian sample order per the format)."""
    arr = _as_uint16(values)
    header = "P5\n%d %d\n%d\n" % (arr.shape[1], arr.shape[0], PGM_MAXVAL)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(arr.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise RasterError("cannot read raster %s: %s" % (path, exc)) from exc
    fields, offset = _pgm_header_fields(data, path)
    magic, width, height, maxval = fields
    if magic != b"P5":
        raise RasterError("%s: not a binary PGM (magic %r)" % (path, magic))
    if not (0 < maxval < 65536):
        raise RasterError("%s: bad maxval %d" % (path, maxval))
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    body = data[offset:]
    expect = count * np.dtype(dtype).itemsize
    if len(body) < expect:
        raise RasterError("%s: truncated pixel data" % (path,))
    arr = np.frombuffer(body[:expect], dtype=dtype).reshape(height, width)
    return arr.astype(np.uint16)


def _pgm_header_fields(data: bytes, path):
    """Magic + three integers, tolerating comments and any whitespace."""
    fields = []
    i = 0
    while len(fields) < 4:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise RasterError("%s: truncated PGM header" % (path,))
        fields.append(data[start:i])
    i += 1  # single whitespace byte separates header from pixels
    try:
        nums = [int(f) for f in fields[1:]]
    except ValueError as exc:
        raise RasterError("%s: non-numeric PGM header field" % (path,)) from exc
    return (fields[0], *nums), i


def write_png(path, values: np.ndarray) -> None:
    arr = _as_uint16(values)
    Image.fromarray(arr).save(path)  # uint16 maps to single-channel 16-bit


def read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img)
    except OSError as exc:
        raise RasterError("cannot read raster %s: %s" % (path, exc)) from exc
    if arr.ndim != 2:
        raise RasterError("%s: expected single-channel raster" % (path,))
    return arr.astype(np.uint16)


def write_raster(path, values: np.ndarray) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(path, values)
    elif path.suffix.lower() == ".png":
        write_png(path, values)
    else:
        raise ValueError("unsupported raster extension: %s" % (path.suffix,))


def read_raster(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise RasterError("raster file not found: %s" % (path,))
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    if path.suffix.lower() == ".png":
        return read_png(path)
    raise RasterError("unsupported raster extension: %s" % (path.suffix,))


def _as_uint16(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError("raster must be 2-D")
    if arr.dtype == np.uint16:
        return np.ascontiguousarray(arr)
    rounded = np.rint(arr)
    if not np.all(np.isfinite(rounded)):
        raise ValueError("raster values must be finite")
    if rounded.min() < 0 or rounded.max() > PGM_MAXVAL:
        raise ValueError("raster values outside [0, %d]" % (PGM_MAXVAL,))
    return rounded.astype(np.uint16)


# ---------------------------------------------------------------------------
# Manifests


def _sensor_to_dict(sensor: SensorSpec) -> dict:
    return {
        "pixels_x": sensor.pixels_x,
        "pixels_y": sensor.pixels_y,
        "strip_width_px": sensor.strip_width_px,
        "n_strips": sensor.n_strips,
        "pixel_pitch_um": sensor.pixel_pitch_um,
        "frame_interval_s": sensor.frame_interval_s,
        "gsd_m": sensor.gsd_m,
    }


def _orbit_to_dict(orbit: OrbitSpec) -> dict:
    return {
        "mean_motion_rev_per_day": orbit.mean_motion,
        "earth_radius_km": orbit.earth_radius_km,
        "time_fractional_error": orbit.time_fractional_error,
    }


def _layout_to_list(layout: BandLayout) -> list:
    return [
        {
            "name": b.name,
            "strip_position": b.strip_position,
            "wavelength_nm": list(b.wavelength_nm),
        }
        for b in layout.bands
    ]


def _sensor_from_dict(data: dict) -> SensorSpec:
    return SensorSpec(
        pixels_x=int(data["pixels_x"]),
        pixels_y=int(data["pixels_y"]),
        strip_width_px=int(data["strip_width_px"]),
        n_strips=int(data["n_strips"]),
        pixel_pitch_um=float(data["pixel_pitch_um"]),
        frame_interval_s=float(data["frame_interval_s"]),
        gsd_m=float(data["gsd_m"]),
    )


def _orbit_from_dict(data: dict) -> OrbitSpec:
    return OrbitSpec(
        mean_motion=float(data["mean_motion_rev_per_day"]),
        earth_radius_km=float(data["earth_radius_km"]),
        time_fractional_error=float(data["time_fractional_error"]),
    )


def _layout_from_list(items) -> BandLayout:
    bands = tuple(
        Band(
            name=str(d["name"]),
            strip_position=int(d["strip_position"]),
            wavelength_nm=tuple(float(w) for w in d["wavelength_nm"]),
        )
        for d in items
    )
    return BandLayout(bands=bands)


def write_scene(result: SimulationResult, out_dir, raster_format: str = "pgm") -> Path:
    """Write rasters + manifest + row times + truth; returns manifest path."""
    if raster_format not in ("pgm", "png"):
        raise ValueError("raster_format must be 'pgm' or 'png'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene = result.scene
    band_files = {}
    for name in sorted(scene.bands):
        fname = "%s.%s" % (name, raster_format)
        write_raster(out / fname, scene.bands[name].values)
        band_files[name] = fname

    write_row_times(out / "row_times.json", result.row_times)
    write_truth(out / "truth.json", result)

    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "scene-manifest",
        "scene_id": scene.scene_id,
        "grid_spacing_m": scene.grid_spacing_m,
        "sensor": _sensor_to_dict(scene.sensor),
        "orbit": _orbit_to_dict(scene.orbit),
        "layout": _layout_to_list(scene.layout),
        "bands": band_files,
        "row_times_path": "row_times.json",
        "truth_path": "truth.json",
    }
    path = out / "manifest.json"
    _dump_json(manifest, path)
    return path


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ManifestError("cannot read manifest %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise ManifestError("manifest %s is not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(data, dict):
        raise ManifestError("manifest %s: top level must be an object" % (path,))
    for key in ("schema_version", "grid_spacing_m", "sensor", "orbit", "layout", "bands"):
        if key not in data:
            raise ManifestError("manifest %s: missing field %r" % (path, key))
    if int(data["schema_version"]) > MANIFEST_SCHEMA_VERSION:
        raise ManifestError(
            "manifest %s: schema version %s is newer than supported %d"
            % (path, data["schema_version"], MANIFEST_SCHEMA_VERSION)
        )
    return data


def load_scene(manifest_path, max_workers: int = 4) -> MultiBandScene:
    """Load a manifest and its rasters into an immutable scene.

    Band rasters are independent files, so they are read concurrently.
    """
    manifest_path = Path(manifest_path)
    data = load_manifest(manifest_path)
    root = manifest_path.parent
    try:
        sensor = _sensor_from_dict(data["sensor"])
        orbit = _orbit_from_dict(data["orbit"])
        layout = _layout_from_list(data["layout"])
        grid = float(data["grid_spacing_m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError("manifest %s: %s" % (manifest_path, exc)) from exc

    band_files = data["bands"]
    missing = [n for n in layout.names() if n not in band_files]
    if missing:
        raise MissingBandError(
            "manifest %s: no raster for band(s) %s" % (manifest_path, ", ".join(missing))
        )

    names = sorted(band_files)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        arrays = list(pool.map(lambda n: read_raster(root / band_files[n]), names))

    shapes = {arr.shape for arr in arrays}
    if len(shapes) > 1:
        detail = ", ".join(
            "%s=%dx%d" % (n, a.shape[0], a.shape[1]) for n, a in zip(names, arrays)
        )
        raise DimensionMismatchError("band rasters disagree on shape: %s" % (detail,))

    bands = {
        n: BandImage(name=n, values=arr.astype(np.float64), grid_spacing_m=grid)
        for n, arr in zip(names, arrays)
    }
    return MultiBandScene(
        bands=bands,
        grid_spacing_m=grid,
        sensor=sensor,
        orbit=orbit,
        layout=layout,
        scene_id=data.get("scene_id"),
    )


# ---------------------------------------------------------------------------
# Row-time maps and ground truth


def write_row_times(path, row_times: RowTimeMap) -> None:
    payload = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "row-times",
        "frame_interval_s": row_times.frame_interval_s,
        "bands": row_times.to_blocks(),
    }
    _dump_json(payload, path)


def load_row_times(path) -> RowTimeMap:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return RowTimeMap.from_blocks(data["bands"], float(data["frame_interval_s"]))


def write_truth(path, result: SimulationResult) -> None:
    def _num(v):
        # Invisible samples carry NaN centroids; JSON gets null instead.
        return v if v is not None and math.isfinite(v) else None

    objects = []
    for obj in result.truth:
        samples = [
            {
                "band": s.band,
                "strip_position": s.strip_position,
                "time_s": s.time_s,
                "visible": s.visible,
                "clipped": s.clipped,
                "block_index": s.block_index,
                "x_m": _num(s.x_m),
                "y_m": _num(s.y_m),
                "x_center_m": _num(s.x_center_m),
                "y_center_m": _num(s.y_center_m),
            }
            for s in obj.samples
        ]
        objects.append(
            {
                "index": obj.index,
                "block_crossings": obj.block_crossings,
                "any_clipped": obj.any_clipped,
                "script": _object_script_dict(obj.script),
                "samples": samples,
            }
        )
    payload = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "ground-truth",
        "scene_id": result.scene.scene_id,
        "script": script_to_dict(result.script),
        "objects": objects,
    }
    _dump_json(payload, path)


def _object_script_dict(script) -> dict:
    data = dataclasses.asdict(script)
    data["size_m"] = list(script.size_m)
    data["position_m"] = list(script.position_m)
    data["velocity_mps"] = list(script.velocity_mps)
    return data


def load_truth(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Reports


def write_report(report: dict, path) -> None:
    """Schema-versioned JSON with sorted keys; repeat runs are byte-identical."""
    if "schema_version" not in report:
        report = {"schema_version": REPORT_SCHEMA_VERSION, **report}
    _dump_json(report, path)


def load_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _dump_json(payload: dict, path) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


# ---------------------------------------------------------------------------
# TLE ephemeris lines


class TleError(ValueError):
    """Base class for TLE parsing failures."""


class TleLengthError(TleError):
    """A line is not exactly 69 characters."""


class TleChecksumError(TleError):
    """A line's mod-10 checksum does not match its final digit."""


class TleFieldError(TleError):
    """A required field is absent or non-numeric."""


@dataclass(frozen=True)
class TleRecord:
    satellite_id: str
    epoch_year: int
    epoch_day: float
    mean_motion: float
    checksums: tuple
    line1: str
    line2: str

    def epoch(self) -> datetime:
        """Epoch as UTC datetime (day-of-year field is 1-based)."""
        base = datetime(self.epoch_year, 1, 1, tzinfo=timezone.utc)
        return datetime.fromtimestamp(
            base.timestamp() + (self.epoch_day - 1.0) * 86400.0, tz=timezone.utc
        )


def tle_checksum(line: str) -> int:
    """Mod-10 sum of the first 68 columns: digits count, '-' counts as 1."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _check_line(line: str, which: int) -> int:
    if len(line) != 69:
        raise TleLengthError(
            "line %d has %d characters, expected 69" % (which, len(line))
        )
    if not line[68].isdigit():
        raise TleChecksumError("line %d checksum column is not a digit" % (which,))
    given = int(line[68])
    computed = tle_checksum(line)
    if given != computed:
        raise TleChecksumError(
            "line %d checksum mismatch: stated %d, computed %d"
            % (which, given, computed)
        )
    if line[0] != str(which):
        raise TleFieldError("line %d does not start with '%d'" % (which, which))
    return given


def parse_tle(line1: str, line2: str) -> TleRecord:
    """Extract mean motion, ids and epoch from a standard element set.

    Columns follow the fixed-width layout: satellite number 3-7, epoch
    19-32 on line 1; mean motion 53-63 on line 2 (1-based, inclusive).
    """
    line1 = line1.rstrip("\n")
    line2 = line2.rstrip("\n")
    c1 = _check_line(line1, 1)
    c2 = _check_line(line2, 2)

    sat_id = line1[2:7].strip()
    if not sat_id:
        raise TleFieldError("satellite number field is blank")
    try:
        epoch_yy = int(line1[18:20])
        epoch_day = float(line1[20:32])
    except ValueError as exc:
        raise TleFieldError("epoch field is not numeric: %r" % (line1[18:32],)) from exc
    try:
        mean_motion = float(line2[52:63])
    except ValueError as exc:
        raise TleFieldError(
            "mean motion field is not numeric: %r" % (line2[52:63],)
        ) from exc
    if not math.isfinite(mean_motion) or not (0.0 < mean_motion < 20.0):
        raise TleFieldError("mean motion %r outside (0, 20)" % (mean_motion,))
    # Standard two-digit year pivot used by element sets.
    epoch_year = 1900 + epoch_yy if epoch_yy >= 57 else 2000 + epoch_yy
    return TleRecord(
        satellite_id=sat_id,
        epoch_year=epoch_year,
        epoch_day=epoch_day,
        mean_motion=mean_motion,
        checksums=(c1, c2),
        line1=line1,
        line2=line2,
    )


def serialize_tle(record: TleRecord) -> tuple:
    return record.line1, record.line2


# ---------------------------------------------------------------------------
# Scene identifiers


class SceneIdError(ValueError):
    """Scene identifier does not match YYYYMMDD_HHMMSS_XX_satid."""


_SCENE_ID_RE = re.compile(
    r"^(?P<date>\d{8})_(?P<time>\d{6})_(?P<seq>[0-9A-Za-z]+)_(?P<sat>[0-9A-Za-z]+)$"
)


def parse_scene_id(scene_id: str) -> tuple:
    """Split an archive-style id into (UTC timestamp, satellite id)."""
    m = _SCENE_ID_RE.match(scene_id)
    if not m:
        raise SceneIdError("malformed scene id: %r" % (scene_id,))
    try:
        stamp = datetime.strptime(
            m.group("date") + m.group("time"), "%Y%m%d%H%M%S"
        ).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise SceneIdError("scene id %r: %s" % (scene_id, exc)) from exc
    return stamp, m.group("sat")


def format_scene_id(timestamp: datetime, satellite_id: str, sequence: str = "00") -> str:
    if timestamp.tzinfo is not None:
        timestamp = timestamp.astimezone(timezone.utc)
    return "%s_%s_%s" % (timestamp.strftime("%Y%m%d_%H%M%S"), sequence, satellite_id)
