"""Sensor geometry, orbit parameters, and inter-band acquisition timing.

A push-broom frame sensor carries one filter strip per spectral band, so every
band images the same patch of ground at a slightly different time.  The
functions here turn sensor and orbit parameters into that timing: satellite
ground speed, the delay between adjacent filter strips, and the time offset
between any two bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class SensorSpec:
    """Geometry of one camera exposure.

    The full frame is ``pixels_x`` across track by ``pixels_y`` along track
    and is divided into ``n_strips`` filter strips of ``strip_width_px`` rows
    each.  ``gsd_m`` is the native ground sample distance of a sensor pixel;
    delivered mosaics may be resampled onto a different grid spacing.
    """

    pixels_x: int = 8880
    pixels_y: int = 5304
    strip_width_px: int = 663
    n_strips: int = 8
    pixel_pitch_um: float = 5.5
    frame_interval_s: float = 0.17
    gsd_m: float = 4.2

    def __post_init__(self):
        if self.pixels_x <= 0 or self.pixels_y <= 0:
            raise ValueError("sensor pixel counts must be positive")
        if self.strip_width_px <= 0 or self.n_strips <= 0:
            raise ValueError("strip layout must be positive")
        if self.n_strips * self.strip_width_px > self.pixels_y:
            raise ValueError(
                "strips do not fit on the sensor: %d * %d > %d"
                % (self.n_strips, self.strip_width_px, self.pixels_y)
            )
        if self.pixel_pitch_um <= 0:
            raise ValueError("pixel pitch must be positive")
        if self.frame_interval_s <= 0:
            raise ValueError("frame interval must be positive")
        if self.gsd_m <= 0:
            raise ValueError("ground sample distance must be positive")


@dataclass(frozen=True)
class OrbitSpec:
    """Orbit parameters needed for ground-speed and timing reconstruction.

    ``mean_motion`` is in orbits per day, as published in ephemeris data.
    ``time_fractional_error`` is the fractional uncertainty assigned to
    reconstructed time intervals.
    """

    mean_motion: float = 15.15
    earth_radius_km: float = 6378.0
    time_fractional_error: float = 0.002

    def __post_init__(self):
        if not (self.mean_motion > 0):
            raise ValueError("mean motion must be positive")
        if not (self.earth_radius_km > 0):
            raise ValueError("earth radius must be positive")
        if self.time_fractional_error < 0:
            raise ValueError("fractional time error cannot be negative")


@dataclass(frozen=True)
class Band:
    """One spectral band: its name, filter strip position, and passband.

    ``strip_position`` counts strips from the leading edge of the sensor with
    respect to the direction of motion; position 0 images a ground point
    first, position ``n_strips - 1`` images it last.
    """

    name: str
    strip_position: int
    wavelength_nm: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.wavelength_nm
        if not (0 < lo < hi):
            raise ValueError("wavelength range must satisfy 0 < lo < hi")
        if self.strip_position < 0:
            raise ValueError("strip position cannot be negative")


@dataclass(frozen=True)
class BandLayout:
    """The mapping between spectral bands and filter strip positions."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        names = [b.name for b in self.bands]
        if len(set(names)) != len(names):
            raise ValueError("duplicate band names in layout")
        positions = sorted(b.strip_position for b in self.bands)
        if positions != list(range(len(self.bands))):
            raise ValueError("strip positions must be a permutation of 0..n-1")
        lows = [b.wavelength_nm[0] for b in self.bands]
        if len(set(lows)) != len(lows):
            raise ValueError("band passbands must have distinct lower edges")

    def band(self, name: str) -> Band:
        for b in self.bands:
            if b.name == name:
                return b
        raise ValueError("unknown band: %r" % (name,))

    def position(self, name: str) -> int:
        return self.band(name).strip_position

    def spectral_order(self) -> tuple[str, ...]:
        """Band names sorted by wavelength, shortest first."""
        return tuple(b.name for b in sorted(self.bands, key=lambda b: b.wavelength_nm[0]))

    def temporal_order(self) -> tuple[str, ...]:
        """Band names sorted by strip position, earliest acquisition first."""
        return tuple(b.name for b in sorted(self.bands, key=lambda b: b.strip_position))

    def __len__(self) -> int:
        return len(self.bands)

    def names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.bands)


# Eight-band layout of the modelled instrument.  Strip positions are not in
# wavelength order: the blue strip leads and coastal blue trails, so the two
# ends of the spectrum bracket the acquisition window.
DEFAULT_LAYOUT = BandLayout(
    bands=(
        Band("CB", 7, (431.0, 452.0)),
        Band("B", 0, (465.0, 515.0)),
        Band("G1", 2, (513.0, 549.0)),
        Band("G2", 3, (547.0, 583.0)),
        Band("Y", 4, (600.0, 620.0)),
        Band("R", 1, (650.0, 680.0)),
        Band("RE", 5, (697.0, 713.0)),
        Band("NIR", 6, (845.0, 885.0)),
    )
)

DEFAULT_SENSOR = SensorSpec()
DEFAULT_ORBIT = OrbitSpec()


def ground_speed(orbit: OrbitSpec) -> float:
    """Speed of the sub-satellite point over the ground, m/s.

    Circular-orbit approximation: one revolution sweeps the full Earth
    circumference at the surface, ``mean_motion`` times per day.
    """
    circumference_m = 2.0 * math.pi * orbit.earth_radius_km * 1000.0
    return circumference_m * orbit.mean_motion / SECONDS_PER_DAY


def strip_ground_extent(sensor: SensorSpec) -> float:
    """Along-track ground length covered by one filter strip, m."""
    return sensor.strip_width_px * sensor.gsd_m


def delta_t_color(sensor: SensorSpec, orbit: OrbitSpec) -> float:
    """Time for the ground footprint to advance by one filter strip, s.

    This is the base acquisition delay between bands on adjacent strip
    positions: strip width times ground sample distance over ground speed.
    """
    dt = strip_ground_extent(sensor) / ground_speed(orbit)
    if not math.isfinite(dt) or dt <= 0:
        raise ValueError("non-finite inter-band delay from sensor/orbit inputs")
    return dt


def band_time_offset(layout: BandLayout, band_a: str, band_b: str, dt_color: float) -> float:
    """Acquisition time of ``band_b`` minus ``band_a`` for one ground point, s.

    Positive when ``band_b`` images the point later.  Antisymmetric in its
    band arguments.
    """
    return (layout.position(band_b) - layout.position(band_a)) * dt_color


def frame_ground_advance(sensor: SensorSpec, orbit: OrbitSpec) -> float:
    """Ground distance the footprint advances between camera frames, m."""
    return ground_speed(orbit) * sensor.frame_interval_s
