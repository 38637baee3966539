"""Scripted scene builders for validation runs.

Randomized end-to-end checks need scenes with known, controlled geometry:
an object that stays clear of every mosaic seam sees the nominal inter-band
delay everywhere, while an object that crosses exactly one seam picks up
exactly one frame-interval correction.  Placement is solved against the
acquisition geometry of the script, including the parallax drift of elevated
objects, so the scripts are correct by construction.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .imaging import DEFAULT_ORBIT, DEFAULT_SENSOR, OrbitSpec, SensorSpec, ground_speed
from .simulate import (
    AcquisitionFrame,
    Background,
    ObjectScript,
    SceneScript,
    acquisition_frame,
)


def _half_extents(size_m, orientation_deg: float) -> tuple:
    """Axis-aligned half extents of the rotated shape's bounding box."""
    th = math.radians(orientation_deg)
    hx = abs(size_m[0] / 2 * math.cos(th)) + abs(size_m[1] / 2 * math.sin(th))
    hy = abs(size_m[0] / 2 * math.sin(th)) + abs(size_m[1] / 2 * math.cos(th))
    return hx, hy


def _parallax_factor(altitude_m: float, h_sat_m: float) -> float:
    return altitude_m / (h_sat_m - altitude_m) if altitude_m > 0 else 0.0


def _apparent_series(
    base: SceneScript,
    frame: AcquisitionFrame,
    velocity,
    altitude_m: float,
    times,
) -> tuple:
    """Apparent positions as affine functions of the scripted position.

    Returns (slope, ax, ay) with apparent x_i = slope * x0 + ax[i] and the
    same for y, so placement constraints reduce to interval arithmetic.
    """
    f = _parallax_factor(altitude_m, base.satellite_altitude_m)
    slope = 1.0 + f
    v_g = ground_speed(base.orbit)
    vx, vy = velocity
    ax = [slope * vx * t - f * frame.sat_track_x_m for t in times]
    ay = [slope * vy * t - f * (frame.sat_y0_m + v_g * t) for t in times]
    return slope, ax, ay


def _pick(rng: np.random.Generator, lo: float, hi: float) -> float:
    if hi < lo:
        raise ValueError("infeasible placement: empty interval [%g, %g]" % (lo, hi))
    return float(lo + rng.uniform(0.0, 1.0) * (hi - lo))


def place_no_crossing(
    base: SceneScript,
    rng: np.random.Generator,
    velocity,
    altitude_m: float,
    size_m,
    orientation_deg: float,
    block_abs: int = 0,
    guard_m: float | None = None,
) -> tuple:
    """Scripted position keeping all eight apparent footprints in one block.

    The clearance from each seam covers the footprint half-height, the drift
    over one frame interval (so the neighbouring block's acquisition time
    cannot catch the object either), and a guard band.
    """
    frame = acquisition_frame(base)
    g = base.grid_spacing_m
    n = len(base.layout)
    times = [frame.block_time(i, block_abs) for i in range(n)]
    slope, ax, ay = _apparent_series(base, frame, velocity, altitude_m, times)
    hx, hy = _half_extents(size_m, orientation_deg)
    f = _parallax_factor(altitude_m, base.satellite_altitude_m)
    v_g = ground_speed(base.orbit)
    vy_app = slope * velocity[1] - f * v_g
    vx_app = slope * velocity[0]
    guard = 2.5 * g if guard_m is None else guard_m

    dt_frame = base.sensor.frame_interval_s
    cy = hy + abs(vy_app) * dt_frame + guard
    lo, hi = frame.block_range_m(block_abs)
    # Stay clear of both seams and keep the footprint inside the scene.
    y_lo = max(lo + cy, hy + guard)
    y_hi = min(hi - cy, base.height_m - hy - guard)
    span_y = max(ay) - min(ay)
    y_target_min = _pick(rng, y_lo, y_hi - span_y)
    y0 = (y_target_min - min(ay)) / slope

    mx = hx + abs(vx_app) * dt_frame + guard
    span_x = max(ax) - min(ax)
    x_target_min = _pick(rng, mx, base.width_m - mx - span_x)
    x0 = (x_target_min - min(ax)) / slope
    return x0, y0


def place_one_crossing(
    base: SceneScript,
    rng: np.random.Generator,
    velocity,
    size_m,
    orientation_deg: float,
    slot_k: int,
    guard_m: float | None = None,
) -> tuple:
    """Scripted position crossing exactly one seam, between chain slots k, k+1.

    Ground-level objects only.  Requires enough along-track speed to clear
    the seam's exclusion zone within one inter-band delay.
    """
    frame = acquisition_frame(base)
    g = base.grid_spacing_m
    n = len(base.layout)
    if not (0 <= slot_k < n - 1):
        raise ValueError("slot must be in 0..%d" % (n - 2,))
    vx, vy = velocity
    if vy == 0:
        raise ValueError("a seam crossing needs along-track motion")

    # Rising objects cross from block 0 into block 1, falling ones the
    # other way; either way the seam sits between the two absolute blocks.
    up = vy > 0
    blocks_i = [0 if (i <= slot_k) == up else 1 for i in range(n)]
    times = [frame.block_time(i, b) for i, b in zip(range(n), blocks_i)]
    hx, hy = _half_extents(size_m, orientation_deg)
    guard = 2.0 * g if guard_m is None else guard_m
    dt_frame = base.sensor.frame_interval_s
    # A rising object drifts toward the next block's later sweep, so its
    # seam clearance includes the drift over one frame interval; a falling
    # object drifts away from the seam-adjacent sweep and needs only the
    # footprint clearance there.  Outer edges keep the conservative term.
    c_outer = hy + abs(vy) * dt_frame + guard
    c_seam = c_outer if up else hy + guard
    boundary = frame.block_range_m(1)[0]

    if up:
        y0_hi = (boundary - c_seam) - vy * times[slot_k]
        y0_lo = (boundary + c_seam) - vy * times[slot_k + 1]
        y_first_lo = max(frame.block_range_m(0)[0] + c_outer, hy + guard)
        y0_lo = max(y0_lo, y_first_lo - vy * times[0])
        y_last_hi = min(frame.block_range_m(1)[1] - c_outer, base.height_m - hy - guard)
        y0_hi = min(y0_hi, y_last_hi - vy * times[-1])
    else:
        y0_lo = (boundary + c_seam) - vy * times[slot_k]
        y0_hi = (boundary - c_seam) - vy * times[slot_k + 1]
        y_first_hi = min(frame.block_range_m(1)[1] - c_outer, base.height_m - hy - guard)
        y0_hi = min(y0_hi, y_first_hi - vy * times[0])
        y_last_lo = max(frame.block_range_m(0)[0] + c_outer, hy + guard)
        y0_lo = max(y0_lo, y_last_lo - vy * times[-1])
    y0 = _pick(rng, y0_lo, y0_hi)

    mx = hx + abs(vx) * dt_frame + guard
    xs = [vx * t for t in times]
    x0 = _pick(rng, mx - min(xs), base.width_m - mx - max(xs))
    return x0, y0


def _mover_size(apparent_speed: float, dt_color: float) -> tuple:
    """Elongate across motion so the two difference residues never overlap."""
    along = min(max(0.45 * apparent_speed * dt_color, 3.0), 24.0)
    return (along, 12.0)


def single_mover_script(
    rng: np.random.Generator,
    speed_mps: float,
    heading_rad: float,
    altitude_m: float = 0.0,
    width_px: int = 1024,
    height_px: int = 1024,
    grid_spacing_m: float = 3.0,
    background_level: float = 8000.0,
    contrast: float = 12000.0,
    noise_sigma: float = 0.0,
    size_m: tuple | None = None,
    sensor: SensorSpec = DEFAULT_SENSOR,
    orbit: OrbitSpec = DEFAULT_ORBIT,
    supersample: int = 4,
) -> SceneScript:
    """One object, no seam crossing, random seam phase and placement."""
    vx = speed_mps * math.cos(heading_rad)
    vy = speed_mps * math.sin(heading_rad)
    base = SceneScript(
        width_px=width_px,
        height_px=height_px,
        grid_spacing_m=grid_spacing_m,
        sensor=sensor,
        orbit=orbit,
        background=Background(level=background_level, noise_sigma=noise_sigma),
        seed=int(rng.integers(0, 2**31)),
        supersample=supersample,
    )
    frame = acquisition_frame(base)
    f = _parallax_factor(altitude_m, base.satellite_altitude_m)
    v_app = math.hypot((1 + f) * vx, (1 + f) * vy - f * ground_speed(orbit))
    if size_m is None:
        size_m = _mover_size(v_app, frame.dt_color_s)
    if v_app > 0:
        orientation = math.degrees(
            math.atan2((1 + f) * vy - f * ground_speed(orbit), (1 + f) * vx)
        )
    else:
        orientation = 0.0
    # Small scenes hold less than one frame block, so not every seam phase
    # admits a crossing-free placement; retry until one does.
    pos = None
    for _ in range(64):
        cand = replace(base, block_phase_m=float(rng.uniform(0.0, frame.frame_advance_m)))
        try:
            pos = place_no_crossing(cand, rng, (vx, vy), altitude_m, size_m, orientation)
        except ValueError:
            continue
        base = cand
        break
    if pos is None:
        raise ValueError("no crossing-free placement fits this scene geometry")
    obj = ObjectScript(
        shape="rectangle",
        size_m=size_m,
        reflectance=background_level + contrast,
        position_m=pos,
        velocity_mps=(vx, vy),
        altitude_m=altitude_m,
        orientation_deg=orientation,
    )
    return replace(base, objects=(obj,))


def crossing_mover_script(
    rng: np.random.Generator,
    width_px: int = 1024,
    height_px: int = 1024,
    grid_spacing_m: float = 3.0,
    background_level: float = 8000.0,
    contrast: float = 12000.0,
    slot_k: int | None = None,
    sensor: SensorSpec = DEFAULT_SENSOR,
    orbit: OrbitSpec = DEFAULT_ORBIT,
) -> tuple:
    """One object crossing exactly one seam.

    Returns (script, slot index of the crossing, sign of the extra frame
    interval that the crossing adds to that slot's delay).
    """
    sign = 1 if rng.integers(0, 2) else -1
    vy = sign * float(rng.uniform(150.0, 240.0))
    vx = float(rng.uniform(-0.5, 0.5)) * abs(vy)
    k = int(rng.integers(1, 6)) if slot_k is None else slot_k
    size_m = (10.0, 8.0)
    orientation = math.degrees(math.atan2(vy, vx))
    base = SceneScript(
        width_px=width_px,
        height_px=height_px,
        grid_spacing_m=grid_spacing_m,
        sensor=sensor,
        orbit=orbit,
        background=Background(level=background_level),
        seed=int(rng.integers(0, 2**31)),
    )
    advance = acquisition_frame(base).frame_advance_m
    pos = None
    for _ in range(64):
        cand = replace(base, block_phase_m=float(rng.uniform(0.0, advance)))
        try:
            pos = place_one_crossing(cand, rng, (vx, vy), size_m, orientation, k)
        except ValueError:
            continue
        base = cand
        break
    if pos is None:
        raise ValueError("no single-crossing placement fits this scene geometry")
    obj = ObjectScript(
        shape="rectangle",
        size_m=size_m,
        reflectance=background_level + contrast,
        position_m=pos,
        velocity_mps=(vx, vy),
        orientation_deg=orientation,
    )
    # Crossing upward enters a later frame block (+1 frame of extra delay);
    # crossing downward enters an earlier one.
    return replace(base, objects=(obj,)), k, (1 if vy > 0 else -1)
