"""Band differencing, thresholding, blob extraction, pairing, and track linking."""

import warnings

import numpy as np
import pytest

from bandtrack import (
    DEFAULT_LAYOUT,
    BandImage,
    Blob,
    DetectionPair,
    MultiBandScene,
    difference,
    extract_blobs,
    link_track,
    normalize_band,
    pair_blobs,
    spectral_adjacent_pairs,
    threshold,
    threshold_level,
)
from bandtrack.detect import DiffImage, shared_threshold_level

GRID = 3.0


def _img(values, name="B"):
    return BandImage(name, np.asarray(values, dtype=float), GRID)


# ----- containers -----


def test_band_image_validation():
    with pytest.raises(ValueError, match="2-D"):
        BandImage("B", np.zeros(5), GRID)
    with pytest.raises(ValueError, match="grid"):
        BandImage("B", np.zeros((4, 4)), 0.0)
    bad = np.zeros((4, 4))
    bad[1, 2] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        BandImage("B", bad, GRID)


def test_scene_validation():
    bands = {n: _img(np.zeros((8, 8)), n) for n in DEFAULT_LAYOUT.names()}
    scene = MultiBandScene(bands, GRID, None, None, DEFAULT_LAYOUT, "s")
    assert scene.shape == (8, 8)
    assert scene.band("Y").name == "Y"

    short = dict(bands)
    del short["NIR"]
    with pytest.raises(ValueError, match="missing bands"):
        MultiBandScene(short, GRID, None, None, DEFAULT_LAYOUT, "s")

    uneven = dict(bands)
    uneven["B"] = _img(np.zeros((8, 9)), "B")
    with pytest.raises(ValueError, match="mismatched"):
        MultiBandScene(uneven, GRID, None, None, DEFAULT_LAYOUT, "s")


# ----- normalization and differencing -----


def test_normalize_band_centers_and_scales():
    rng = np.random.default_rng(3)
    v = rng.normal(50.0, 7.0, size=(64, 64))
    out = normalize_band(v)
    assert np.median(out) == pytest.approx(0.0, abs=1e-12)
    q1, q3 = np.percentile(out, [25, 75])
    assert q3 - q1 == pytest.approx(1.0, abs=1e-12)


def test_normalize_band_constant_input():
    out = normalize_band(np.full((6, 6), 123.0))
    assert np.all(out == 0.0)


def test_adjacent_pairs_order_and_slot_gaps():
    pairs = spectral_adjacent_pairs(DEFAULT_LAYOUT)
    assert pairs == [
        ("CB", "B"),
        ("B", "G1"),
        ("G1", "G2"),
        ("G2", "Y"),
        ("Y", "R"),
        ("R", "RE"),
        ("RE", "NIR"),
    ]
    gaps = [
        DEFAULT_LAYOUT.position(a) - DEFAULT_LAYOUT.position(b) for a, b in pairs
    ]
    assert gaps == [7, -2, -1, -1, 3, -4, -1]


def test_difference_of_identical_band_is_exactly_zero():
    rng = np.random.default_rng(11)
    v = rng.uniform(0, 10000, size=(32, 32))
    d = difference(_img(v, "G1"), _img(v.copy(), "G2"))
    assert np.all(d.values == 0.0)


def test_difference_cancels_shared_structure():
    rng = np.random.default_rng(12)
    base = rng.uniform(100, 200, size=(32, 32))
    # Same structure under different gain and offset still cancels.
    d = difference(_img(3.0 * base + 40.0, "B"), _img(0.5 * base - 7.0, "G1"))
    assert np.abs(d.values).max() < 1e-9


def test_difference_validation():
    with pytest.raises(ValueError, match="cannot difference"):
        difference(_img(np.zeros((4, 4))), _img(np.zeros((4, 5)), "R"))
    a = BandImage("B", np.zeros((4, 4)), 3.0)
    b = BandImage("R", np.zeros((4, 4)), 4.2)
    with pytest.raises(ValueError, match="different grids"):
        difference(a, b)


def test_difference_already_normalized_skips_rescale():
    rng = np.random.default_rng(13)
    a = rng.normal(size=(16, 16))
    b = rng.normal(size=(16, 16))
    d = difference(_img(a), _img(b, "R"), already_normalized=True)
    assert np.allclose(d.values, a - b)


# ----- thresholding -----


def test_threshold_level_percentile_matches_quantile():
    rng = np.random.default_rng(21)
    v = rng.normal(size=(50, 50))
    lvl = threshold_level(v, 0.95)
    assert lvl == float(np.quantile(np.abs(v), 0.95, method="higher"))


def test_threshold_level_peak_mode():
    v = np.array([[0.0, -10.0], [5.0, 1.0]])
    assert threshold_level(v, 0.95, mode="peak") == pytest.approx(0.5)


def test_threshold_level_validation():
    with pytest.raises(ValueError):
        threshold_level(np.ones((2, 2)), 1.5)
    with pytest.raises(ValueError, match="mode"):
        threshold_level(np.ones((2, 2)), 0.9, mode="median")
    with pytest.raises(ValueError, match="empty"):
        threshold_level(np.zeros((0,)), 0.9)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_threshold_survivor_fraction(seed):
    rng = np.random.default_rng(seed)
    d = DiffImage(rng.normal(size=(60, 60)), "B", "G1", GRID)
    out = threshold(d, percentile=0.95)
    assert np.count_nonzero(out.values) <= 0.05 * d.values.size
    # Survivors keep their original signed values.
    kept = out.values[out.values != 0]
    assert np.all(np.abs(kept) > out.threshold_level)


def test_threshold_fixed_level_idempotent():
    rng = np.random.default_rng(22)
    d = DiffImage(rng.normal(size=(40, 40)), "B", "G1", GRID)
    once = threshold(d, percentile=0.9)
    twice = threshold(once, level=once.threshold_level)
    assert np.array_equal(once.values, twice.values)


def test_threshold_degenerate_histogram_warns():
    v = np.full((8, 8), 2.0)
    v[::2] *= -1.0
    with pytest.warns(RuntimeWarning, match="degenerate"):
        out = threshold(DiffImage(v, "B", "G1", GRID))
    assert np.all(out.values == 0.0)


def test_threshold_all_zero_input_is_quiet():
    d = DiffImage(np.zeros((8, 8)), "B", "G1", GRID)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = threshold(d)
    assert np.all(out.values == 0.0)


def test_shared_threshold_level_pools_histograms():
    a = DiffImage(np.full((4, 4), 1.0), "B", "G1", GRID)
    b = DiffImage(np.full((4, 4), 3.0), "G1", "G2", GRID)
    lvl = shared_threshold_level([a, b], 0.5)
    assert threshold_level(np.concatenate([a.values.ravel(), b.values.ravel()]), 0.5) == lvl


# ----- blob extraction -----


def test_extract_blobs_square_centroid():
    v = np.zeros((32, 32))
    v[10:15, 10:15] = 2.0
    blobs = extract_blobs(DiffImage(v, "B", "G1", GRID))
    assert len(blobs) == 1
    b = blobs[0]
    assert b.polarity == 1
    assert b.area_px == 25
    assert b.centroid_px == (12.0, 12.0)
    assert b.peak == 2.0


def test_extract_blobs_weighted_subpixel_centroid():
    v = np.zeros((16, 16))
    v[5, 5] = 1.0
    v[5, 6] = 3.0
    blobs = extract_blobs(DiffImage(v, "B", "G1", GRID), min_area=1)
    assert blobs[0].centroid_px == (pytest.approx(5.75), pytest.approx(5.0))


def test_extract_blobs_polarity_and_sort():
    v = np.zeros((24, 24))
    v[2:5, 2:5] = 1.0        # positive, top
    v[2:5, 10:13] = -1.5     # negative, top right
    v[15:18, 4:7] = -2.0     # negative, bottom
    blobs = extract_blobs(DiffImage(v, "B", "G1", GRID))
    assert [b.polarity for b in blobs] == [1, -1, -1]
    assert [b.centroid_px[1] for b in blobs] == [3.0, 3.0, 16.0]
    # Same row: positive listed before negative via the sort key.
    assert blobs[0].centroid_px[0] < blobs[1].centroid_px[0]


def test_extract_blobs_min_area_filter():
    v = np.zeros((16, 16))
    v[3, 3] = 5.0
    v[8:11, 8:11] = 5.0
    blobs = extract_blobs(DiffImage(v, "B", "G1", GRID), min_area=3)
    assert len(blobs) == 1
    assert blobs[0].area_px == 9
    with pytest.raises(ValueError):
        extract_blobs(DiffImage(v, "B", "G1", GRID), min_area=0)


def test_extract_blobs_eight_connectivity():
    v = np.zeros((8, 8))
    v[1, 1] = 1.0
    v[2, 2] = 1.0
    v[3, 3] = 1.0
    blobs = extract_blobs(DiffImage(v, "B", "G1", GRID), min_area=1)
    assert len(blobs) == 1
    assert blobs[0].area_px == 3


def test_blob_validation():
    with pytest.raises(ValueError):
        Blob(0, (1.0, 1.0), 4, 1.0)
    with pytest.raises(ValueError):
        Blob(1, (1.0, 1.0), 0, 1.0)


# ----- pairing -----


def _blob(polarity, x, y):
    return Blob(polarity, (float(x), float(y)), 9, 4.0)


def test_pair_blobs_displacement():
    res = pair_blobs(
        [_blob(1, 10, 10), _blob(-1, 13, 14)],
        max_displacement_px=6.0,
        minuend="B",
        subtrahend="G1",
        grid_spacing_m=GRID,
    )
    assert len(res.pairs) == 1
    assert not res.unmatched
    d = res.pairs[0]
    assert d.displacement_px == (-3.0, -4.0)
    assert d.displacement_m == (-9.0, -12.0)
    assert d.minuend == "B" and d.subtrahend == "G1"


def test_pair_blobs_greedy_nearest_first():
    res = pair_blobs(
        [_blob(1, 0, 0), _blob(-1, 1, 0), _blob(-1, 3, 0)],
        max_displacement_px=10.0,
    )
    assert len(res.pairs) == 1
    assert res.pairs[0].negative.centroid_px == (1.0, 0.0)
    assert [b.centroid_px for b in res.unmatched] == [(3.0, 0.0)]


def test_pair_blobs_each_blob_used_once():
    res = pair_blobs(
        [_blob(1, 0, 0), _blob(1, 2, 0), _blob(-1, 1, 0)],
        max_displacement_px=10.0,
    )
    assert len(res.pairs) == 1
    assert len(res.unmatched) == 1


def test_pair_blobs_gate_excludes_far_matches():
    res = pair_blobs([_blob(1, 0, 0), _blob(-1, 30, 0)], max_displacement_px=5.0)
    assert not res.pairs
    assert len(res.unmatched) == 2


# ----- track linking -----

_POS_OF = {n: DEFAULT_LAYOUT.position(n) for n in DEFAULT_LAYOUT.names()}


def _det(minuend, subtrahend, minuend_px, subtrahend_px, bright=True):
    pos_px = minuend_px if bright else subtrahend_px
    neg_px = subtrahend_px if bright else minuend_px
    dx = pos_px[0] - neg_px[0]
    dy = pos_px[1] - neg_px[1]
    return DetectionPair(
        positive=_blob(1, *pos_px),
        negative=_blob(-1, *neg_px),
        minuend=minuend,
        subtrahend=subtrahend,
        displacement_px=(dx, dy),
        displacement_m=(dx * GRID, dy * GRID),
    )


def _track_positions(p0=(10.0, 20.0), v=(2.0, 3.0)):
    """Object pixel position at each strip position for per-slot motion v."""
    return [(p0[0] + v[0] * i, p0[1] + v[1] * i) for i in range(8)]


def _pairs_for(positions, bright=True, skip=()):
    out = []
    for slot, (bluer, redder) in enumerate(spectral_adjacent_pairs(DEFAULT_LAYOUT)):
        if slot in skip:
            out.append([])
            continue
        pa = positions[_POS_OF[bluer]]
        pb = positions[_POS_OF[redder]]
        out.append([_det(bluer, redder, pa, pb, bright)])
    return out


def test_link_track_single_object():
    positions = _track_positions()
    tracks = link_track(_pairs_for(positions), DEFAULT_LAYOUT, GRID)
    assert len(tracks) == 1
    t = tracks[0]
    assert t.n_pairs == 7
    assert len(t.samples) == 8
    assert not t.ambiguous and not t.bridged
    for s in t.samples:
        px = positions[s.strip_position]
        assert s.x_m == pytest.approx((px[0] + 0.5) * GRID)
        assert s.y_m == pytest.approx((px[1] + 0.5) * GRID)
    # Bands shared by two pairs contribute two identical fixes.
    by_band = {s.band: s for s in t.samples}
    assert by_band["B"].n_sources == 2
    assert by_band["CB"].n_sources == 1
    assert by_band["NIR"].n_sources == 1


def test_link_track_two_objects():
    a = _pairs_for(_track_positions((10.0, 10.0)))
    b = _pairs_for(_track_positions((60.0, 80.0), v=(-1.0, 2.0)))
    merged = [da + db for da, db in zip(a, b)]
    tracks = link_track(merged, DEFAULT_LAYOUT, GRID)
    assert len(tracks) == 2
    assert all(t.n_pairs == 7 for t in tracks)
    # Sorted by first-sample ground position.
    assert tracks[0].samples[0].y_m < tracks[1].samples[0].y_m


def test_link_track_bridges_single_missing_pair():
    tracks = link_track(_pairs_for(_track_positions(), skip=(3,)), DEFAULT_LAYOUT, GRID)
    assert len(tracks) == 1
    t = tracks[0]
    assert t.bridged
    assert t.n_pairs == 6
    assert len(t.samples) == 8


def test_link_track_gate_splits_far_detections():
    positions = _track_positions()
    pairs = _pairs_for(positions)
    # Move one detection far outside the gate; the chain breaks in two.
    far = [(x + 50.0, y + 50.0) for x, y in positions]
    pairs[4] = [_det("Y", "R", far[_POS_OF["Y"]], far[_POS_OF["R"]])]
    tracks = link_track(pairs, DEFAULT_LAYOUT, GRID, gate_px=3.0)
    assert len(tracks) >= 2


def test_link_track_forks_on_ambiguity():
    positions = _track_positions(v=(0.0, 0.0))
    pairs = _pairs_for(positions)
    # A second detection in slot 1 whose shared-band position also gates.
    dup = [(x + 1.0, y) for x, y in positions]
    pairs[1] = pairs[1] + [_det("B", "G1", dup[0], dup[2])]
    tracks = link_track(pairs, DEFAULT_LAYOUT, GRID, gate_px=3.0)
    assert len(tracks) >= 2
    assert any(t.ambiguous for t in tracks)


def test_link_track_dark_objects_flip_polarity():
    positions = _track_positions()
    bright = link_track(_pairs_for(positions, bright=True), DEFAULT_LAYOUT, GRID)
    dark = link_track(
        _pairs_for(positions, bright=False), DEFAULT_LAYOUT, GRID, bright_objects=False
    )
    assert len(bright) == len(dark) == 1
    for sb, sd in zip(bright[0].samples, dark[0].samples):
        assert (sb.x_m, sb.y_m) == (sd.x_m, sd.y_m)


def test_link_track_requires_full_pair_list():
    with pytest.raises(ValueError, match="expected detections for 7"):
        link_track([[]], DEFAULT_LAYOUT, GRID)
