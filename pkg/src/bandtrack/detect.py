"""Moving-object detection in multi-band mosaics.

A mover appears at a different position in each band because the bands are
acquired at different times.  Differencing bands that are adjacent in
wavelength cancels the static scene and leaves a positive and a negative
copy of each mover; thresholding, blob extraction, and opposite-polarity
pairing turn those into per-pair detections, and chaining detections that
share a band links them into one track across all eight bands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import BandLayout, OrbitSpec, SensorSpec

# 8-connectivity for blob labelling.
_CONN8 = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class BandImage:
    """One band of a mosaic on a common ground grid."""

    name: str
    values: np.ndarray
    grid_spacing_m: float

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError("band image must be 2-D")
        if self.grid_spacing_m <= 0:
            raise ValueError("grid spacing must be positive")
        if not np.isfinite(v).all():
            raise ValueError("band %r contains non-finite values" % (self.name,))

    @property
    def shape(self) -> tuple:
        return self.values.shape


@dataclass(frozen=True)
class MultiBandScene:
    """All bands of one scene plus the metadata needed to analyze it."""

    bands: dict
    grid_spacing_m: float
    sensor: SensorSpec
    orbit: OrbitSpec
    layout: BandLayout
    scene_id: str

    def __post_init__(self):
        shapes = {b.values.shape for b in self.bands.values()}
        if len(shapes) > 1:
            raise ValueError("bands have mismatched dimensions: %s" % (sorted(shapes),))
        missing = set(self.layout.names()) - set(self.bands)
        if missing:
            raise ValueError("scene is missing bands: %s" % (sorted(missing),))

    def band(self, name: str) -> BandImage:
        return self.bands[name]

    @property
    def shape(self) -> tuple:
        return next(iter(self.bands.values())).values.shape


@dataclass(frozen=True)
class DiffImage:
    """Difference of two normalized bands, optionally thresholded."""

    values: np.ndarray
    minuend: str
    subtrahend: str
    grid_spacing_m: float
    threshold_level: float | None = None


def normalize_band(values: np.ndarray) -> np.ndarray:
    """Shift to zero median and scale by the interquartile range.

    Removes per-band gain and offset so that static scene content cancels in
    a band difference.  A degenerate (zero) interquartile range falls back to
    unit scale rather than dividing by zero.
    """
    v = np.asarray(values, dtype=float)
    med = np.median(v)
    q1, q3 = np.percentile(v, [25.0, 75.0])
    iqr = q3 - q1
    if iqr <= 0:
        iqr = 1.0
    return (v - med) / iqr


def spectral_adjacent_pairs(layout: BandLayout) -> list:
    """Band name pairs adjacent in wavelength, as (bluer, redder)."""
    order = layout.spectral_order()
    if len(order) < 2:
        raise ValueError("layout has too few bands for differencing")
    return [(order[i], order[i + 1]) for i in range(len(order) - 1)]


def difference(a: BandImage, b: BandImage, already_normalized: bool = False) -> DiffImage:
    """Per-pixel ``a - b`` after normalizing each band.

    Set ``already_normalized`` when the caller has run ``normalize_band``
    itself (e.g. to share the work across the seven pairs a band appears in).
    """
    if a.values.shape != b.values.shape:
        raise ValueError(
            "cannot difference %r %s against %r %s"
            % (a.name, a.values.shape, b.name, b.values.shape)
        )
    if a.grid_spacing_m != b.grid_spacing_m:
        raise ValueError("bands are on different grids")
    if already_normalized:
        d = a.values - b.values
    else:
        d = normalize_band(a.values) - normalize_band(b.values)
    return DiffImage(d, a.name, b.name, a.grid_spacing_m)


def threshold_level(values: np.ndarray, percentile: float = 0.95, mode: str = "percentile") -> float:
    """Sparsification level for one or more difference images.

    ``percentile`` mode takes the given quantile of the magnitude histogram;
    ``peak`` mode takes ``(1 - percentile)`` of the maximum magnitude, i.e.
    a 0.95 setting keeps pixels above 5 percent of the peak.
    """
    if not (0 < percentile < 1):
        raise ValueError("percentile must be in (0, 1)")
    mag = np.abs(np.asarray(values, dtype=float)).ravel()
    if mag.size == 0:
        raise ValueError("cannot threshold an empty image")
    if mode == "percentile":
        # method='higher' keeps the survivor count at or below (1-p)*N.
        return float(np.quantile(mag, percentile, method="higher"))
    if mode == "peak":
        return float((1.0 - percentile) * mag.max())
    raise ValueError("unknown threshold mode: %r" % (mode,))


def threshold(
    diff: DiffImage,
    percentile: float = 0.95,
    mode: str = "percentile",
    level: float | None = None,
) -> DiffImage:
    """Zero every pixel whose magnitude is at or below the threshold level.

    Pass ``level`` to apply an externally computed (e.g. shared) level;
    otherwise the level comes from this image's own magnitude histogram.
    Thresholding at a fixed level is idempotent.
    """
    if level is None:
        level = threshold_level(diff.values, percentile, mode)
        mag = np.abs(diff.values)
        if mag.size and mag.max() == mag.min() and mag.max() > 0:
            warnings.warn(
                "threshold: magnitude histogram is degenerate (all values equal); "
                "output is empty",
                RuntimeWarning,
                stacklevel=2,
            )
    out = np.where(np.abs(diff.values) > level, diff.values, 0.0)
    return DiffImage(out, diff.minuend, diff.subtrahend, diff.grid_spacing_m, float(level))


def shared_threshold_level(diffs, percentile: float = 0.95, mode: str = "percentile") -> float:
    """One level from the pooled magnitude histogram of several differences."""
    pooled = np.concatenate([np.abs(d.values).ravel() for d in diffs])
    return threshold_level(pooled, percentile, mode)


@dataclass(frozen=True)
class Blob:
    """One connected component of a thresholded difference image."""

    polarity: int          # +1 or -1
    centroid_px: tuple     # (col, row), intensity weighted
    area_px: int
    peak: float            # maximum magnitude inside the component

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError("polarity must be +1 or -1")
        if self.area_px <= 0:
            raise ValueError("blob area must be positive")


def extract_blobs(diff: DiffImage, min_area: int = 3) -> list:
    """8-connected components of one polarity each, smallest ones dropped.

    Centroids are weighted by magnitude, which preserves sub-pixel position
    for objects rendered with partial pixel coverage at their edges.
    """
    if min_area < 1:
        raise ValueError("min_area must be at least 1")
    blobs = []
    for polarity in (1, -1):
        mask = diff.values > 0 if polarity > 0 else diff.values < 0
        labels, count = ndimage.label(mask, structure=_CONN8)
        if count == 0:
            continue
        # Thresholded diffs are sparse, so gather per-label statistics from
        # the nonzero coordinates instead of full-array passes per label.
        ys, xs = np.nonzero(mask)
        lab = labels[ys, xs]
        w = np.abs(diff.values[ys, xs])
        areas = np.bincount(lab, minlength=count + 1)
        wsum = np.bincount(lab, weights=w, minlength=count + 1)
        cx_sum = np.bincount(lab, weights=w * xs, minlength=count + 1)
        cy_sum = np.bincount(lab, weights=w * ys, minlength=count + 1)
        peaks = np.zeros(count + 1)
        np.maximum.at(peaks, lab, w)
        for k in range(1, count + 1):
            if areas[k] < min_area:
                continue
            centroid = (float(cx_sum[k] / wsum[k]), float(cy_sum[k] / wsum[k]))
            blobs.append(Blob(polarity, centroid, int(areas[k]), float(peaks[k])))
    blobs.sort(key=lambda b: (b.centroid_px[1], b.centroid_px[0], -b.polarity))
    return blobs


@dataclass(frozen=True)
class DetectionPair:
    """A positive and negative blob interpreted as one mover in one pair.

    ``displacement_px`` points from the negative to the positive blob, i.e.
    toward the object's position in the minuend band for a bright object.
    """

    positive: Blob
    negative: Blob
    minuend: str
    subtrahend: str
    displacement_px: tuple
    displacement_m: tuple


@dataclass(frozen=True)
class PairingResult:
    pairs: list
    unmatched: list


def pair_blobs(
    blobs,
    max_displacement_px: float,
    minuend: str = "",
    subtrahend: str = "",
    grid_spacing_m: float = 1.0,
) -> PairingResult:
    """Greedy mutual-nearest-neighbor matching of + against - blobs.

    Candidate pairs within ``max_displacement_px`` are accepted in order of
    increasing separation, each blob at most once; blobs left over are
    reported unmatched.
    """
    pos = [b for b in blobs if b.polarity > 0]
    neg = [b for b in blobs if b.polarity < 0]
    candidates = []
    for i, p in enumerate(pos):
        for j, n in enumerate(neg):
            dx = p.centroid_px[0] - n.centroid_px[0]
            dy = p.centroid_px[1] - n.centroid_px[1]
            dist = float(np.hypot(dx, dy))
            if dist <= max_displacement_px:
                candidates.append((dist, i, j))
    candidates.sort()

    used_p: set = set()
    used_n: set = set()
    pairs = []
    for dist, i, j in candidates:
        if i in used_p or j in used_n:
            continue
        used_p.add(i)
        used_n.add(j)
        p, n = pos[i], neg[j]
        dx = p.centroid_px[0] - n.centroid_px[0]
        dy = p.centroid_px[1] - n.centroid_px[1]
        pairs.append(
            DetectionPair(
                positive=p,
                negative=n,
                minuend=minuend,
                subtrahend=subtrahend,
                displacement_px=(dx, dy),
                displacement_m=(dx * grid_spacing_m, dy * grid_spacing_m),
            )
        )
    unmatched = [p for i, p in enumerate(pos) if i not in used_p]
    unmatched += [n for j, n in enumerate(neg) if j not in used_n]
    pairs.sort(key=lambda d: (d.positive.centroid_px[1], d.positive.centroid_px[0]))
    return PairingResult(pairs, unmatched)


@dataclass(frozen=True)
class TrackSample:
    """Object position in one band, in ground coordinates."""

    band: str
    strip_position: int
    x_m: float
    y_m: float
    n_sources: int  # how many detection pairs contributed (1 or 2)


@dataclass(frozen=True)
class Track:
    """Per-band positions of one object, ordered by acquisition time."""

    samples: tuple
    n_pairs: int
    ambiguous: bool = False
    bridged: bool = False

    def positions_by_strip(self) -> dict:
        return {s.strip_position: (s.x_m, s.y_m) for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)


class _Chain:
    __slots__ = ("last_slot", "band_positions", "slots_used", "ambiguous", "bridged")

    def __init__(self):
        self.last_slot = -1
        self.band_positions: dict = {}
        self.slots_used: list = []
        self.ambiguous = False
        self.bridged = False

    def add(self, slot: int, band_a: str, pos_a: tuple, band_b: str, pos_b: tuple):
        self.band_positions.setdefault(band_a, []).append(pos_a)
        self.band_positions.setdefault(band_b, []).append(pos_b)
        self.slots_used.append(slot)
        self.last_slot = slot

    def clone(self) -> "_Chain":
        c = _Chain()
        c.last_slot = self.last_slot
        c.band_positions = {k: list(v) for k, v in self.band_positions.items()}
        c.slots_used = list(self.slots_used)
        c.ambiguous = self.ambiguous
        c.bridged = self.bridged
        return c


def _pair_band_positions(det: DetectionPair, bright: bool) -> tuple:
    """Map the +/- blobs of a pair onto (minuend pos, subtrahend pos), px."""
    if bright:
        return det.positive.centroid_px, det.negative.centroid_px
    return det.negative.centroid_px, det.positive.centroid_px


def link_track(
    detections_by_pair,
    layout: BandLayout,
    grid_spacing_m: float,
    gate_px: float = 3.0,
    bright_objects: bool = True,
) -> list:
    """Chain per-pair detections into cross-band tracks.

    Args:
        detections_by_pair: list over the spectral-adjacent pairs, each a list
            of DetectionPair for that pair, in ``spectral_adjacent_pairs``
            order.
        layout: band layout, for strip positions.
        grid_spacing_m: converts pixel centroids into ground metres.
        gate_px: two detections belong to the same object when the band they
            share is seen within this radius in both.
        bright_objects: polarity convention; movers darker than the scene put
            their minuend-band position in the negative blob instead.

    Consecutive spectral pairs share one band, so a chain is extended when the
    shared-band positions agree within the gate.  If several chains match one
    detection, all of them are extended and flagged ambiguous.  A chain that
    skipped one pair may be bridged without a gate when the continuation is
    unique; such tracks are flagged bridged.
    """
    pairs = spectral_adjacent_pairs(layout)
    if len(detections_by_pair) != len(pairs):
        raise ValueError(
            "expected detections for %d pairs, got %d" % (len(pairs), len(detections_by_pair))
        )

    chains: list = []
    for slot, ((band_a, band_b), dets) in enumerate(zip(pairs, detections_by_pair)):
        # Match against chain state from before this slot so that several
        # detections competing for one chain fork it instead of racing.
        snapshot = {id(c): c.clone() for c in chains}
        extended: set = set()
        new_chains: list = []
        ungated: list = []
        for det in dets:
            pos_a, pos_b = _pair_band_positions(det, bright_objects)
            gated = [
                c
                for c in chains
                if c.last_slot == slot - 1
                and band_a in c.band_positions
                and np.hypot(
                    snapshot[id(c)].band_positions[band_a][-1][0] - pos_a[0],
                    snapshot[id(c)].band_positions[band_a][-1][1] - pos_a[1],
                )
                <= gate_px
            ]
            if not gated:
                ungated.append((det, pos_a, pos_b))
                continue
            for c in gated:
                if id(c) in extended:
                    fork = snapshot[id(c)].clone()
                    fork.ambiguous = True
                    c.ambiguous = True
                    fork.add(slot, band_a, pos_a, band_b, pos_b)
                    new_chains.append(fork)
                else:
                    extended.add(id(c))
                    c.ambiguous = c.ambiguous or len(gated) > 1
                    c.add(slot, band_a, pos_a, band_b, pos_b)
        chains.extend(new_chains)

        # One-slot bridge: a chain that missed the previous pair has no shared
        # band to gate on; accept only an unambiguous continuation.
        bridgeable = [
            c for c in chains if c.last_slot == slot - 2 and id(c) not in extended
        ]
        if len(ungated) == 1 and len(bridgeable) == 1:
            det, pos_a, pos_b = ungated[0]
            c = bridgeable[0]
            c.bridged = True
            c.add(slot, band_a, pos_a, band_b, pos_b)
        else:
            for det, pos_a, pos_b in ungated:
                fresh = _Chain()
                fresh.add(slot, band_a, pos_a, band_b, pos_b)
                chains.append(fresh)

    tracks = []
    for c in chains:
        samples = []
        for band, positions in c.band_positions.items():
            arr = np.asarray(positions, dtype=float)
            cx, cy = arr.mean(axis=0)
            samples.append(
                TrackSample(
                    band=band,
                    strip_position=layout.position(band),
                    x_m=(cx + 0.5) * grid_spacing_m,
                    y_m=(cy + 0.5) * grid_spacing_m,
                    n_sources=len(positions),
                )
            )
        samples.sort(key=lambda s: s.strip_position)
        tracks.append(
            Track(
                samples=tuple(samples),
                n_pairs=len(c.slots_used),
                ambiguous=c.ambiguous,
                bridged=c.bridged,
            )
        )
    tracks.sort(key=lambda t: (t.samples[0].y_m, t.samples[0].x_m))
    return tracks
