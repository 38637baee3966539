"""Synthetic acquisition simulator for push-broom band mosaics.

The simulator renders scripted scenes through the same acquisition model the
detection and kinematics stages assume, so end-to-end recovery of scripted
velocities validates the whole chain against known truth.

Timing model.  Each band's mosaic is stitched from camera frames taken every
``frame_interval_s``; one frame contributes a block of output rows whose
ground height equals the footprint advance between frames.  All bands share
the same block grid (the progression of acquisition times across the mosaic
is set by the frame rate and the orbit, identically for every band), and a
band at strip position p lags the leading strip by ``p * delta_t_color``.
Row acquisition time is therefore

    t(band, row) = strip_position(band) * delta_t_color
                   + block_index(row) * frame_interval

with scene time zero at the first contributing frame.  An object whose rows
stay inside one block between two bands is seen exactly ``delta_t_color``
apart; drifting across a block boundary adds or removes one frame interval,
which is what the kinematics correction search looks for.

Objects are rendered as opaque shapes over the background at the acquisition
time of each row block, box-sampled on a supersampled subgrid.  An object at
altitude is displaced by parallax along the track according to the satellite
position at acquisition time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .detect import BandImage, MultiBandScene
from .imaging import (
    DEFAULT_LAYOUT,
    DEFAULT_ORBIT,
    DEFAULT_SENSOR,
    BandLayout,
    OrbitSpec,
    SensorSpec,
    delta_t_color,
    frame_ground_advance,
    ground_speed,
)

RASTER_MAX = 65535.0


@dataclass(frozen=True)
class ObjectScript:
    """One scripted object: shape, motion, and per-band reflectance.

    ``position_m`` is the ground-projected position of the shape centre at
    scene time zero; ``velocity_mps`` moves it linearly.  ``reflectance`` is
    either one raster level for all bands or a mapping band name -> level.
    ``size_m`` is (extent along x, extent along y) before ``orientation_deg``
    rotates the shape counterclockwise.
    """

    shape: str
    size_m: tuple
    reflectance: object
    position_m: tuple
    velocity_mps: tuple = (0.0, 0.0)
    altitude_m: float = 0.0
    orientation_deg: float = 0.0

    def __post_init__(self):
        if self.shape not in ("rectangle", "ellipse"):
            raise ValueError("shape must be 'rectangle' or 'ellipse', got %r" % (self.shape,))
        sx, sy = self.size_m
        if sx <= 0 or sy <= 0:
            raise ValueError("object size must be positive")
        if self.altitude_m < 0:
            raise ValueError("object altitude cannot be negative")

    def reflectance_for(self, band: str) -> float:
        if isinstance(self.reflectance, dict):
            try:
                value = self.reflectance[band]
            except KeyError:
                raise ValueError("object reflectance missing band %r" % (band,)) from None
        else:
            value = self.reflectance
        value = float(value)
        if not (0 <= value <= RASTER_MAX):
            raise ValueError("reflectance %g outside raster range" % value)
        return value


@dataclass(frozen=True)
class Background:
    """Static scene under the objects.

    The same base map (level plus optional smooth texture) is scaled by a
    per-band gain, mimicking band-dependent illumination; per-pixel Gaussian
    noise is drawn independently per band.
    """

    level: float = 8000.0
    band_gains: dict | None = None
    texture_amplitude: float = 0.0
    texture_scale_px: float = 16.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not (0 <= self.level <= RASTER_MAX):
            raise ValueError("background level outside raster range")
        if self.texture_amplitude < 0 or self.noise_sigma < 0:
            raise ValueError("texture amplitude and noise sigma cannot be negative")
        if self.texture_scale_px <= 0:
            raise ValueError("texture scale must be positive")

    def gain_for(self, band: str) -> float:
        if self.band_gains is None:
            return 1.0
        try:
            return float(self.band_gains[band])
        except KeyError:
            raise ValueError("background gains missing band %r" % (band,)) from None


@dataclass(frozen=True)
class SceneScript:
    """Complete description of one synthetic acquisition."""

    width_px: int = 1024
    height_px: int = 1024
    grid_spacing_m: float = 3.0
    sensor: SensorSpec = DEFAULT_SENSOR
    orbit: OrbitSpec = DEFAULT_ORBIT
    layout: BandLayout = DEFAULT_LAYOUT
    background: Background = field(default_factory=Background)
    objects: tuple = ()
    block_phase_m: float = 0.0
    overlap_policy: str = "latest"
    satellite_altitude_m: float = 500_000.0
    satellite_track_x_m: float | None = None
    satellite_y0_m: float | None = None
    seed: int = 0
    supersample: int = 4
    scene_id: str | None = None

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("scene dimensions must be positive")
        if self.grid_spacing_m <= 0:
            raise ValueError("grid spacing must be positive")
        if self.overlap_policy not in ("latest", "earliest"):
            raise ValueError("overlap policy must be 'latest' or 'earliest'")
        if self.supersample < 1:
            raise ValueError("supersample factor must be at least 1")
        if self.satellite_altitude_m <= 0:
            raise ValueError("satellite altitude must be positive")
        for obj in self.objects:
            if obj.altitude_m >= self.satellite_altitude_m:
                raise ValueError("object altitude must be below the satellite")

    @property
    def width_m(self) -> float:
        return self.width_px * self.grid_spacing_m

    @property
    def height_m(self) -> float:
        return self.height_px * self.grid_spacing_m


@dataclass
class RowTimeMap:
    """Acquisition time of every output row in every band.

    Within a band, times are constant over contiguous row blocks,
    non-decreasing along track, and step by exactly one frame interval
    between adjacent blocks.
    """

    band_times: dict
    frame_interval_s: float

    def time(self, band: str, row: int) -> float:
        try:
            times = self.band_times[band]
        except KeyError:
            raise ValueError("unknown band: %r" % (band,)) from None
        if not (0 <= row < len(times)):
            raise IndexError("row %d outside 0..%d" % (row, len(times) - 1))
        return float(times[row])

    def n_rows(self) -> int:
        return len(next(iter(self.band_times.values())))

    def validate(self, tol: float = 1e-9):
        for band, times in self.band_times.items():
            steps = np.diff(times)
            if (steps < -tol).any():
                raise ValueError("row times decrease along track in band %r" % (band,))
            jumps = steps[steps > tol]
            if jumps.size and not np.allclose(jumps, self.frame_interval_s, atol=tol):
                raise ValueError(
                    "adjacent row blocks in band %r differ by %s, not one frame interval"
                    % (band, sorted(set(np.round(jumps, 12))))
                )

    def to_blocks(self) -> dict:
        """Run-length encoding: per band, [start_row, end_row, time] triples."""
        blocks = {}
        for band, times in self.band_times.items():
            runs = []
            start = 0
            for r in range(1, len(times) + 1):
                if r == len(times) or times[r] != times[start]:
                    runs.append([start, r, float(times[start])])
                    start = r
            blocks[band] = runs
        return blocks

    @classmethod
    def from_blocks(cls, blocks: dict, frame_interval_s: float) -> "RowTimeMap":
        band_times = {}
        for band, runs in blocks.items():
            n = max(end for _, end, _ in runs)
            times = np.empty(n, dtype=float)
            filled = 0
            for start, end, t in runs:
                times[start:end] = t
                filled += end - start
            if filled != n:
                raise ValueError("row time blocks for band %r do not tile the image" % (band,))
            band_times[band] = times
        return cls(band_times, frame_interval_s)


def row_time(row_times: RowTimeMap, band: str, row: int) -> float:
    """Scene-relative acquisition time of one output row, seconds."""
    return row_times.time(band, row)


@dataclass(frozen=True)
class TruthSample:
    """Where one object actually rendered in one band."""

    band: str
    strip_position: int
    time_s: float
    visible: bool
    clipped: bool
    block_index: int | None
    x_m: float | None        # rendered coverage-weighted centroid
    y_m: float | None
    x_center_m: float | None  # ideal apparent centre at acquisition time
    y_center_m: float | None


@dataclass(frozen=True)
class TruthObject:
    """Ground truth for one scripted object across all bands."""

    index: int
    script: ObjectScript
    samples: tuple
    block_crossings: int
    any_clipped: bool

    def positions_by_strip(self) -> dict:
        return {
            s.strip_position: (s.x_m, s.y_m)
            for s in self.samples
            if s.visible and s.x_m is not None
        }


@dataclass(frozen=True)
class SimulationResult:
    scene: MultiBandScene
    row_times: RowTimeMap
    truth: tuple
    script: SceneScript


class ScriptError(ValueError):
    """A scene script failed validation; the message names the bad field."""


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ScriptError("missing required field %s.%s" % (path, key))
    return mapping[key]


def script_from_dict(data: dict) -> SceneScript:
    """Build a SceneScript from parsed JSON, reporting the offending path."""
    if not isinstance(data, dict):
        raise ScriptError("scene script must be a JSON object")
    try:
        scene = _require(data, "scene", "$")
        objects = []
        for i, od in enumerate(data.get("objects", [])):
            path = "$.objects[%d]" % i
            try:
                objects.append(
                    ObjectScript(
                        shape=_require(od, "shape", path),
                        size_m=tuple(_require(od, "size_m", path)),
                        reflectance=_require(od, "reflectance", path),
                        position_m=tuple(_require(od, "position_m", path)),
                        velocity_mps=tuple(od.get("velocity_mps", (0.0, 0.0))),
                        altitude_m=float(od.get("altitude_m", 0.0)),
                        orientation_deg=float(od.get("orientation_deg", 0.0)),
                    )
                )
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ScriptError):
                    raise
                raise ScriptError("%s: %s" % (path, exc)) from None

        bg = data.get("background", {})
        background = Background(
            level=float(bg.get("level", 8000.0)),
            band_gains=bg.get("band_gains"),
            texture_amplitude=float(bg.get("texture_amplitude", 0.0)),
            texture_scale_px=float(bg.get("texture_scale_px", 16.0)),
            noise_sigma=float(bg.get("noise_sigma", 0.0)),
        )

        sensor = SensorSpec(**data["sensor"]) if "sensor" in data else DEFAULT_SENSOR
        orbit = OrbitSpec(**data["orbit"]) if "orbit" in data else DEFAULT_ORBIT

        acq = data.get("acquisition", {})
        return SceneScript(
            width_px=int(_require(scene, "width_px", "$.scene")),
            height_px=int(_require(scene, "height_px", "$.scene")),
            grid_spacing_m=float(_require(scene, "grid_spacing_m", "$.scene")),
            sensor=sensor,
            orbit=orbit,
            layout=DEFAULT_LAYOUT,
            background=background,
            objects=tuple(objects),
            block_phase_m=float(acq.get("block_phase_m", 0.0)),
            overlap_policy=acq.get("overlap_policy", "latest"),
            satellite_altitude_m=float(acq.get("satellite_altitude_m", 500_000.0)),
            satellite_track_x_m=acq.get("satellite_track_x_m"),
            satellite_y0_m=acq.get("satellite_y0_m"),
            seed=int(data.get("seed", 0)),
            supersample=int(data.get("supersample", 4)),
            scene_id=scene.get("scene_id"),
        )
    except ScriptError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ScriptError(str(exc)) from None


def script_to_dict(script: SceneScript) -> dict:
    """Inverse of ``script_from_dict`` for round-tripping scripts to JSON."""
    data = {
        "scene": {
            "width_px": script.width_px,
            "height_px": script.height_px,
            "grid_spacing_m": script.grid_spacing_m,
        },
        "background": {
            "level": script.background.level,
            "band_gains": script.background.band_gains,
            "texture_amplitude": script.background.texture_amplitude,
            "texture_scale_px": script.background.texture_scale_px,
            "noise_sigma": script.background.noise_sigma,
        },
        "objects": [
            {
                "shape": o.shape,
                "size_m": list(o.size_m),
                "reflectance": o.reflectance,
                "position_m": list(o.position_m),
                "velocity_mps": list(o.velocity_mps),
                "altitude_m": o.altitude_m,
                "orientation_deg": o.orientation_deg,
            }
            for o in script.objects
        ],
        "acquisition": {
            "block_phase_m": script.block_phase_m,
            "overlap_policy": script.overlap_policy,
            "satellite_altitude_m": script.satellite_altitude_m,
            "satellite_track_x_m": script.satellite_track_x_m,
            "satellite_y0_m": script.satellite_y0_m,
        },
        "seed": script.seed,
        "supersample": script.supersample,
    }
    if script.scene_id is not None:
        data["scene"]["scene_id"] = script.scene_id
    if script.sensor != DEFAULT_SENSOR:
        data["sensor"] = {
            "pixels_x": script.sensor.pixels_x,
            "pixels_y": script.sensor.pixels_y,
            "strip_width_px": script.sensor.strip_width_px,
            "n_strips": script.sensor.n_strips,
            "pixel_pitch_um": script.sensor.pixel_pitch_um,
            "frame_interval_s": script.sensor.frame_interval_s,
            "gsd_m": script.sensor.gsd_m,
        }
    if script.orbit != DEFAULT_ORBIT:
        data["orbit"] = {
            "mean_motion": script.orbit.mean_motion,
            "earth_radius_km": script.orbit.earth_radius_km,
            "time_fractional_error": script.orbit.time_fractional_error,
        }
    return data


def _texture_field(rng: np.random.Generator, height: int, width: int, scale_px: float) -> np.ndarray:
    """Smooth zero-mean unit-std random field shared by all bands."""
    white = rng.standard_normal((height, width))
    smooth = ndimage.gaussian_filter(white, sigma=scale_px, mode="wrap")
    std = smooth.std()
    if std == 0:
        return np.zeros((height, width))
    return smooth / std


def _apparent_position(
    obj: ObjectScript,
    t: float,
    sat_x_m: float,
    sat_y0_m: float,
    v_ground: float,
    h_sat_m: float,
) -> tuple:
    """Ground-projected apparent centre of the object at time t.

    The line of sight from the satellite through an elevated object meets the
    ground displaced away from the sub-satellite point by h/(H - h) times the
    horizontal offset, so the apparent position drifts against the track as
    the satellite passes.
    """
    x = obj.position_m[0] + obj.velocity_mps[0] * t
    y = obj.position_m[1] + obj.velocity_mps[1] * t
    if obj.altitude_m > 0:
        f = obj.altitude_m / (h_sat_m - obj.altitude_m)
        x += f * (x - sat_x_m)
        y += f * (y - (sat_y0_m + v_ground * t))
    return x, y


def _coverage_patch(
    obj: ObjectScript,
    center_xy_m: tuple,
    row_range: tuple,
    width_px: int,
    grid_m: float,
    supersample: int,
) -> tuple:
    """Box-sampled coverage of the shape inside one block's row range.

    Returns (coverage array, (row0, col0)) or None when the shape misses the
    range entirely.  Pixel centres sit at (index + 0.5) * grid spacing.
    """
    cx, cy = center_xy_m
    theta = math.radians(obj.orientation_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    hx, hy = obj.size_m[0] / 2.0, obj.size_m[1] / 2.0
    # Axis-aligned bound of the rotated shape.
    bound_x = abs(hx * cos_t) + abs(hy * sin_t)
    bound_y = abs(hx * sin_t) + abs(hy * cos_t)

    r0 = max(int(math.floor((cy - bound_y) / grid_m)), row_range[0])
    r1 = min(int(math.ceil((cy + bound_y) / grid_m)) + 1, row_range[1])
    c0 = max(int(math.floor((cx - bound_x) / grid_m)), 0)
    c1 = min(int(math.ceil((cx + bound_x) / grid_m)) + 1, width_px)
    if r0 >= r1 or c0 >= c1:
        return None

    ss = supersample
    sub = (np.arange(ss) + 0.5) / ss
    xs = (np.arange(c0, c1)[:, None] + sub[None, :]).reshape(-1) * grid_m - cx
    ys = (np.arange(r0, r1)[:, None] + sub[None, :]).reshape(-1) * grid_m - cy
    # Rotate subcell offsets into the object frame: u along size_m[0], v along
    # size_m[1].  outer(a, b)[i, j] = a_i + b_j keeps rows as the y axis.
    u = np.add.outer(ys * sin_t, xs * cos_t)
    v = np.add.outer(ys * cos_t, -xs * sin_t)
    if obj.shape == "rectangle":
        inside = (np.abs(u) <= hx) & (np.abs(v) <= hy)
    else:
        inside = (u / hx) ** 2 + (v / hy) ** 2 <= 1.0
    cov = inside.reshape(r1 - r0, ss, c1 - c0, ss).mean(axis=(1, 3))
    if not cov.any():
        return None
    return cov, (r0, c0)


@dataclass(frozen=True)
class AcquisitionFrame:
    """Derived timing geometry of one scripted acquisition."""

    dt_color_s: float
    frame_advance_m: float     # ground height of one row block
    seam_phase_m: float        # ground y of a block boundary, in [0, advance)
    block_offset: int          # relative index of the block starting at the phase
    row_times: RowTimeMap
    blocks: np.ndarray         # relative block index per row
    sat_track_x_m: float
    sat_y0_m: float
    t_max_s: float

    def block_range_m(self, k_abs: int) -> tuple:
        """Ground y interval of absolute block ``k_abs`` (0 starts at the phase)."""
        lo = self.seam_phase_m + k_abs * self.frame_advance_m
        return lo, lo + self.frame_advance_m

    def block_time(self, band_position: int, k_abs: int) -> float:
        """Acquisition time of absolute block ``k_abs`` in a band."""
        return (
            band_position * self.dt_color_s
            + (k_abs + self.block_offset) * self.row_times.frame_interval_s
        )


def acquisition_frame(script: SceneScript) -> AcquisitionFrame:
    """Build the row time map and satellite geometry for a script.

    Scene time zero is the first frame contributing to the scene, i.e. the
    earliest time in the map.
    """
    sensor, orbit = script.sensor, script.orbit
    dt_color = delta_t_color(sensor, orbit)
    d_frame = frame_ground_advance(sensor, orbit)
    phase = script.block_phase_m
    if script.overlap_policy == "earliest":
        # The earliest contributing frame changes where the seams fall.
        phase += sensor.strip_width_px * sensor.gsd_m
    phase %= d_frame

    y_centers = (np.arange(script.height_px) + 0.5) * script.grid_spacing_m
    blocks_abs = np.floor((y_centers - phase) / d_frame).astype(int)
    blk_min = int(blocks_abs.min())
    blocks = blocks_abs - blk_min

    band_times = {}
    for band in script.layout.bands:
        band_times[band.name] = band.strip_position * dt_color + blocks * sensor.frame_interval_s
    row_times = RowTimeMap(band_times, sensor.frame_interval_s)
    t_max = max(float(t.max()) for t in band_times.values())

    v_ground = ground_speed(orbit)
    sat_x = script.satellite_track_x_m
    if sat_x is None:
        sat_x = script.width_m / 2.0
    sat_y0 = script.satellite_y0_m
    if sat_y0 is None:
        # Put the satellite over the scene centre at mid-acquisition.
        sat_y0 = script.height_m / 2.0 - v_ground * (t_max / 2.0)

    return AcquisitionFrame(
        dt_color_s=dt_color,
        frame_advance_m=d_frame,
        seam_phase_m=phase,
        block_offset=-blk_min,
        row_times=row_times,
        blocks=blocks,
        sat_track_x_m=float(sat_x),
        sat_y0_m=float(sat_y0),
        t_max_s=t_max,
    )


def simulate(script: SceneScript) -> SimulationResult:
    """Render a scripted scene through the acquisition model.

    Returns the rendered bands (already quantized to whole raster counts so
    that a write/read cycle is lossless), the row time map, and per-object
    ground truth.  Objects that extend past the scene edge in some band are
    flagged clipped rather than raising; objects that miss the scene entirely
    in a band are flagged not visible.
    """
    sensor, orbit, layout = script.sensor, script.orbit, script.layout
    g = script.grid_spacing_m
    v_ground = ground_speed(orbit)
    h_sat = script.satellite_altitude_m

    frame = acquisition_frame(script)
    times, blocks = frame.row_times, frame.blocks
    sat_x, sat_y0 = frame.sat_track_x_m, frame.sat_y0_m

    # Row ranges of each block, in scene row indices.
    block_ranges = []
    for b in np.unique(blocks):
        rows = np.nonzero(blocks == b)[0]
        block_ranges.append((int(b), int(rows[0]), int(rows[-1]) + 1))

    rng = np.random.default_rng(script.seed)
    texture = None
    if script.background.texture_amplitude > 0:
        texture = script.background.texture_amplitude * _texture_field(
            rng, script.height_px, script.width_px, script.background.texture_scale_px
        )

    truth_acc = [
        {band.name: None for band in layout.bands} for _ in script.objects
    ]  # per object, per band: [sum_cov, sum_cov_x, sum_cov_y, clipped]

    bands = {}
    for band_name in layout.temporal_order():
        base = script.background.level
        gain = script.background.gain_for(band_name)
        img = np.full((script.height_px, script.width_px), base * gain, dtype=float)
        if texture is not None:
            img += texture * gain
        if script.background.noise_sigma > 0:
            img += rng.normal(0.0, script.background.noise_sigma, img.shape)

        for blk, r0, r1 in block_ranges:
            t = times.time(band_name, r0)
            for obj_idx, obj in enumerate(script.objects):
                center = _apparent_position(obj, t, sat_x, sat_y0, v_ground, h_sat)
                patch = _coverage_patch(obj, center, (r0, r1), script.width_px, g, script.supersample)
                acc = truth_acc[obj_idx]
                if acc[band_name] is None:
                    acc[band_name] = [0.0, 0.0, 0.0, False, []]
                entry = acc[band_name]
                # Clipping check against the scene, not the block: block seams
                # are interior and an object may legitimately span them.
                theta = math.radians(obj.orientation_deg)
                bx = abs(obj.size_m[0] / 2 * math.cos(theta)) + abs(obj.size_m[1] / 2 * math.sin(theta))
                by = abs(obj.size_m[0] / 2 * math.sin(theta)) + abs(obj.size_m[1] / 2 * math.cos(theta))
                spans_rows = center[1] + by > r0 * g and center[1] - by < r1 * g
                if spans_rows and (
                    center[0] - bx < 0
                    or center[0] + bx > script.width_m
                    or (r0 == 0 and center[1] - by < 0)
                    or (r1 == script.height_px and center[1] + by > script.height_m)
                ):
                    entry[3] = True
                if patch is None:
                    continue
                cov, (pr0, pc0) = patch
                refl = obj.reflectance_for(band_name)
                view = img[pr0 : pr0 + cov.shape[0], pc0 : pc0 + cov.shape[1]]
                view *= 1.0 - cov
                view += refl * cov
                csum = float(cov.sum())
                if csum > 0:
                    ys = (np.arange(pr0, pr0 + cov.shape[0]) + 0.5) * g
                    xs = (np.arange(pc0, pc0 + cov.shape[1]) + 0.5) * g
                    entry[0] += csum
                    entry[1] += float((cov * xs[None, :]).sum())
                    entry[2] += float((cov * ys[:, None]).sum())
                    entry[4].append((blk, t, center, csum))

        img = np.clip(np.rint(img), 0.0, RASTER_MAX)
        bands[band_name] = BandImage(band_name, img, g)

    scene_id = script.scene_id or "sim-%08d" % (script.seed,)
    scene = MultiBandScene(
        bands=bands,
        grid_spacing_m=g,
        sensor=sensor,
        orbit=orbit,
        layout=layout,
        scene_id=scene_id,
    )

    truth = []
    for obj_idx, obj in enumerate(script.objects):
        samples = []
        crossings = 0
        prev_block = None
        for band in sorted(layout.bands, key=lambda b: b.strip_position):
            entry = truth_acc[obj_idx][band.name]
            if entry is None or entry[0] == 0:
                samples.append(
                    TruthSample(band.name, band.strip_position, float("nan"), False,
                                bool(entry and entry[3]), None, None, None, None, None)
                )
                continue
            csum, sx, sy, clipped, hits = entry
            # The block that rendered most of the object decides its time; a
            # footprint torn across a seam keeps the dominant part.
            main_block, t_main, center, _ = max(hits, key=lambda h: (h[3], -h[0]))
            samples.append(
                TruthSample(
                    band=band.name,
                    strip_position=band.strip_position,
                    time_s=t_main,
                    visible=True,
                    clipped=clipped,
                    block_index=main_block,
                    x_m=sx / csum,
                    y_m=sy / csum,
                    x_center_m=center[0],
                    y_center_m=center[1],
                )
            )
            if prev_block is not None:
                crossings += abs(main_block - prev_block)
            prev_block = main_block
        truth.append(
            TruthObject(
                index=obj_idx,
                script=obj,
                samples=tuple(samples),
                block_crossings=crossings,
                any_clipped=any(s.clipped for s in samples),
            )
        )

    return SimulationResult(scene=scene, row_times=times, truth=tuple(truth), script=script)
