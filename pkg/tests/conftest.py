"""
Shared fixtures for the chankit test suite.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from cache import calibration_cache, gain_cache
from model import (
    AngleGrid,
    AntennaPattern,
    Direction,
    DirectionalPdp,
    LinkMeta,
    SounderConfig,
    SweepRecord,
)

# Six azimuths 60 degrees apart, one elevation
SMALL_AZIMUTHS = (-180.0, -120.0, -60.0, 0.0, 60.0, 120.0)


@pytest.fixture(autouse=True)
def clear_caches():
    """Clear memo caches around each test."""
    for cache in (gain_cache, calibration_cache):
        cache.clear()
    yield
    for cache in (gain_cache, calibration_cache):
        cache.clear()


@pytest.fixture
def config():
    return SounderConfig()


@pytest.fixture
def pattern():
    return AntennaPattern()


@pytest.fixture
def small_grid():
    return AngleGrid(azimuths=SMALL_AZIMUTHS, elevations=(0.0,))


@pytest.fixture
def single_beam_grid():
    return AngleGrid(azimuths=(0.0,), elevations=(0.0,))


@pytest.fixture
def meta():
    return LinkMeta(link_id="TX1-RX01", distance=20.0, scenario="LOS", tx_id="TX1", rx_id="RX01")


@pytest.fixture
def make_sweep(config, pattern, meta):
    """Build a sweep over ``grid`` from {(tx_index, rx_index): samples}."""

    def build(grid, profiles, dwell=0.05):
        dirs = grid.directions()
        pdps = []
        for k, ((a, b), samples) in enumerate(sorted(profiles.items())):
            pdps.append(DirectionalPdp(
                tx_dir=dirs[a],
                rx_dir=dirs[b],
                capture_time=k * dwell,
                samples=np.asarray(samples, dtype=float),
            ))
        return SweepRecord(config=config, pattern=pattern, grid=grid, meta=meta, pdps=tuple(pdps))

    return build


@pytest.fixture
def boresight():
    return Direction(0.0, 0.0)
