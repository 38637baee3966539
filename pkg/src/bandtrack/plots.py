"""Figure rendering for reports.  File output only, so the Agg backend."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .detect import BandImage, MultiBandScene, difference, normalize_band  # noqa: E402
from .kinematics import AmbiguityCurve  # noqa: E402
from .pipeline import SceneDetections, spectral_adjacent_pairs  # noqa: E402

_DPI = 120


def composite_figure(scene: MultiBandScene, path, bands=("R", "G1", "B")) -> None:
    """RGB quicklook with a per-channel 2-98 percentile stretch."""
    channels = []
    for name in bands:
        v = scene.band(name).values.astype(float)
        lo, hi = np.percentile(v, [2.0, 98.0])
        channels.append(np.clip((v - lo) / max(hi - lo, 1e-9), 0.0, 1.0))
    rgb = np.dstack(channels)
    h, w = rgb.shape[:2]
    fig, ax = plt.subplots(figsize=(6.0, 6.0 * h / w), dpi=_DPI)
    ax.imshow(rgb, origin="lower", interpolation="nearest")
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    ax.set_title("composite %s" % ("/".join(bands),))
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def difference_figure(
    scene: MultiBandScene, detections: SceneDetections, path, max_panels: int = 7
) -> None:
    """Panel per spectral-adjacent pair: diff image with blob centroids."""
    pairs = spectral_adjacent_pairs(scene.layout)[:max_panels]
    normalized = {
        n: BandImage(n, normalize_band(b.values), scene.grid_spacing_m)
        for n, b in scene.bands.items()
    }
    n = len(pairs)
    cols = min(n, 4)
    rows = math.ceil(n / cols)
    fig, axes = plt.subplots(
        rows, cols, figsize=(3.2 * cols, 3.4 * rows), dpi=_DPI, squeeze=False
    )
    for ax in axes.flat[n:]:
        ax.set_axis_off()
    for ax, (bluer, redder), pairdet in zip(axes.flat, pairs, detections.pairs):
        diff = difference(normalized[bluer], normalized[redder], already_normalized=True)
        span = max(abs(float(diff.values.min())), abs(float(diff.values.max())), 1e-9)
        ax.imshow(
            diff.values,
            origin="lower",
            cmap="RdBu_r",
            vmin=-span,
            vmax=span,
            interpolation="nearest",
        )
        for det in pairdet.pairing.pairs:
            px, py = det.positive.centroid_px
            nx, ny = det.negative.centroid_px
            ax.plot([px], [py], "k+", ms=8)
            ax.plot([nx], [ny], "kx", ms=8)
            ax.annotate(
                "",
                xy=(px, py),
                xytext=(nx, ny),
                arrowprops={"arrowstyle": "->", "color": "k", "lw": 0.8},
            )
        ax.set_title(
            "%s - %s  (level %.3g)" % (bluer, redder, pairdet.threshold_level),
            fontsize=9,
        )
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def velocity_figure(analyses, path) -> None:
    """Per-slot speeds before and after frame corrections, one row per track."""
    n = max(len(analyses), 1)
    fig, axes = plt.subplots(n, 1, figsize=(6.4, 2.6 * n), dpi=_DPI, squeeze=False)
    for ax in axes.flat[len(analyses):]:
        ax.set_axis_off()
    for idx, (ax, a) in enumerate(zip(axes.flat, analyses)):
        est = a.estimate
        slots = np.arange(len(est.adjustments_s))
        naive = []
        by_strip = a.track.positions_by_strip()
        for i in slots:
            p, q = by_strip.get(int(i)), by_strip.get(int(i) + 1)
            naive.append(
                math.hypot(q[0] - p[0], q[1] - p[1]) / est.dt_color_s
                if p is not None and q is not None
                else np.nan
            )
        corrected = [
            np.nan if v is None else float(np.hypot(*v)) for v in est.velocities_mps
        ]
        ax.plot(slots, naive, "o--", label="uncorrected", color="0.5")
        ax.plot(slots, corrected, "s-", label="frame-corrected", color="C0")
        ax.axhline(est.speed_mps, color="C3", lw=0.8, label="mean speed")
        ax.set_ylabel("speed (m/s)")
        ax.set_title(
            "track %d: %.1f m/s, sigma %.1f" % (idx, est.speed_mps, est.sigma_v_mps),
            fontsize=9,
        )
        ax.legend(fontsize=7, loc="best")
    axes.flat[min(len(analyses), n) - 1].set_xlabel("chain slot")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def ambiguity_figure(curve: AmbiguityCurve, path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 4.0), dpi=_DPI)
    ax.plot(np.asarray(curve.altitudes_m) / 1000.0, curve.apparent_speed_mps, "C0-")
    ax.set_xlabel("object altitude (km)")
    ax.set_ylabel("apparent ground speed (m/s)")
    ax.set_title(
        "stationary-object parallax, satellite at %.0f km"
        % (curve.satellite_altitude_m / 1000.0,)
    )
    ax.grid(True, lw=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
