"""Shared fixtures: one simulated mover scene reused by the slower test modules."""

import numpy as np
import pytest

from bandtrack import DetectConfig, detect_scene, simulate, single_mover_script, write_scene


@pytest.fixture(scope="session")
def mover_sim():
    """512 px scene with a single 120 m/s mover on heading 0.6 rad, noise free."""
    rng = np.random.default_rng(4021)
    script = single_mover_script(
        rng, speed_mps=120.0, heading_rad=0.6, width_px=512, height_px=512
    )
    return simulate(script)


@pytest.fixture(scope="session")
def mover_detections(mover_sim):
    return detect_scene(mover_sim.scene, DetectConfig(workers=2))


@pytest.fixture(scope="session")
def scene_manifest(mover_sim, tmp_path_factory):
    """The same scene written to disk; returns the manifest path."""
    out = tmp_path_factory.mktemp("scene")
    return write_scene(mover_sim, out)
