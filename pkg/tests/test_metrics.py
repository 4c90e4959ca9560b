"""
Unit tests for received power, path loss, delay statistics and CDFs.
"""

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from extraction import BeamPeaks
from metrics import (
    angular_power_map,
    delay_stats,
    empirical_cdf,
    fit_pool,
    omni_rx_power,
    omni_rx_power_raw,
    padp_path_loss,
    path_loss,
    scenario_offsets,
)
from model import CimFit, Direction, LinkMeta, Mpc, Padp, PathLossSample, Scenario
from validation import InsufficientDataError, NoSignalError, ValidationError

BORESIGHT = Direction(0.0, 0.0)


def _padp(taus, powers, meta=None):
    mpcs = tuple(Mpc(float(t), float(p), BORESIGHT, BORESIGHT) for t, p in sorted(zip(taus, powers)))
    return Padp(mpcs=mpcs, meta=meta)


def _naive_stats(taus, powers_dbm):
    """Direct evaluation of the weighted mean delay and RMS spread."""
    p = [10.0 ** (x / 10.0) for x in powers_dbm]
    total = sum(p)
    avg = sum(pi * ti for pi, ti in zip(p, taus)) / total
    second = sum(pi * (ti - avg) ** 2 for pi, ti in zip(p, taus)) / total
    return avg, math.sqrt(second)


class TestOmniRxPower:
    """Tests for omni_rx_power."""

    def test_single(self):
        assert omni_rx_power(_padp([1.0], [-70.0])) == pytest.approx(-70.0)

    def test_two_equal(self):
        assert omni_rx_power(_padp([1.0, 2.0], [-70.0, -70.0])) == pytest.approx(-66.9897, abs=1e-4)

    def test_unequal(self):
        assert omni_rx_power(_padp([1.0, 2.0], [-70.0, -90.0])) == pytest.approx(-69.9568, abs=1e-4)

    def test_empty_raises(self):
        with pytest.raises(NoSignalError):
            omni_rx_power(Padp())

    def test_very_weak_paths_do_not_underflow(self):
        assert omni_rx_power(_padp([1.0, 2.0], [-190.0, -190.0])) == pytest.approx(-186.9897, abs=1e-4)

    def test_raw_sum_counts_every_detection(self):
        beams = [
            BeamPeaks(BORESIGHT, BORESIGHT, 0.0, -120.0, ((10.0, -70.0),)),
            BeamPeaks(Direction(18.0, 0.0), BORESIGHT, 0.05, -120.0, ((10.0, -70.0),)),
        ]
        assert omni_rx_power_raw(beams) == pytest.approx(-66.9897, abs=1e-4)
        with pytest.raises(NoSignalError):
            omni_rx_power_raw([BeamPeaks(BORESIGHT, BORESIGHT, 0.0, -120.0, ())])


class TestPathLoss:
    """Tests for path_loss."""

    def test_nominal(self):
        pl = path_loss(-10.0, -80.0, 17.0, 17.0)
        assert pl.db == pytest.approx(104.0)
        assert not pl.suspicious

    def test_zero_loss_flagged(self):
        pl = path_loss(-10.0, -10.0, 0.0, 0.0)
        assert pl.db == 0.0
        assert pl.suspicious

    def test_beyond_measurable_range_flagged(self):
        pl = path_loss(-10.0, -178.0, 17.0, 17.0)
        assert pl.db == pytest.approx(202.0)
        assert pl.suspicious

    def test_non_finite_raises(self):
        with pytest.raises(ValidationError):
            path_loss(-10.0, float("nan"), 17.0, 17.0)

    @given(
        st.floats(-30, 30), st.floats(-150, -40), st.floats(-10, 25), st.floats(-10, 25), st.floats(0.01, 20),
    )
    def test_more_received_power_means_less_loss(self, tx, p_rx, g_tx, g_rx, delta):
        low = path_loss(tx, p_rx, g_tx, g_rx).db
        high = path_loss(tx, p_rx + delta, g_tx, g_rx).db
        assert low - high == pytest.approx(delta)

    def test_padp_path_loss(self, config, pattern):
        meta = LinkMeta("TX1-RX01", 20.0, "LOS")
        sample = padp_path_loss(_padp([66.7], [-80.0], meta), config, pattern)
        assert sample.path_loss == pytest.approx(104.0)
        assert sample.link_id == "TX1-RX01"
        assert sample.scenario is Scenario.LOS

    def test_padp_path_loss_needs_meta(self, config, pattern):
        with pytest.raises(ValidationError, match="metadata"):
            padp_path_loss(_padp([1.0], [-80.0]), config, pattern)


class TestDelayStats:
    """Tests for delay_stats."""

    def test_single_mpc(self):
        stats = delay_stats(_padp([123.4], [-75.0]))
        assert stats.tau_avg == pytest.approx(123.4)
        assert stats.tau_rms == 0.0

    def test_symmetric_pair(self):
        stats = delay_stats(_padp([0.0, 10.0], [-70.0, -70.0]))
        assert stats.tau_avg == pytest.approx(5.0)
        assert stats.tau_rms == pytest.approx(5.0)

    def test_weighted_triple(self):
        powers = [10 * math.log10(1.0), 10 * math.log10(2.0), 10 * math.log10(1.0)]
        stats = delay_stats(_padp([0.0, 5.0, 10.0], powers))
        assert stats.tau_avg == pytest.approx(5.0)
        assert stats.tau_rms == pytest.approx(3.5355, abs=1e-4)

    def test_empty_raises(self):
        with pytest.raises(NoSignalError):
            delay_stats(Padp())

    def test_matches_naive_evaluation(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(1, 20))
            taus = np.sort(rng.uniform(0.0, 500.0, n))
            powers = rng.uniform(-100.0, -60.0, n)
            stats = delay_stats(_padp(taus, powers))
            avg, rms = _naive_stats(taus.tolist(), powers.tolist())
            assert stats.tau_avg == pytest.approx(avg, rel=1e-12, abs=1e-12)
            assert stats.tau_rms == pytest.approx(rms, rel=1e-12, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(0, 300), st.floats(-120, -50)), min_size=1, max_size=12),
        st.floats(-20, 20),
        st.floats(0, 100),
    )
    def test_power_scaling_and_delay_shift(self, paths, gain, shift):
        taus, powers = zip(*paths)
        base = delay_stats(_padp(taus, powers))
        scaled = delay_stats(_padp(taus, [p + gain for p in powers]))
        shifted = delay_stats(_padp([t + shift for t in taus], powers))
        assert scaled.tau_rms == pytest.approx(base.tau_rms, rel=1e-9, abs=1e-9)
        assert shifted.tau_rms == pytest.approx(base.tau_rms, rel=1e-9, abs=1e-7)
        assert shifted.tau_avg == pytest.approx(base.tau_avg + shift, rel=1e-9, abs=1e-7)


class TestEmpiricalCdf:
    """Tests for empirical_cdf."""

    def test_single(self):
        assert empirical_cdf([1.0]) == [(1.0, 1.0)]

    def test_sorted_output(self):
        cdf = empirical_cdf([3.0, 1.0, 2.0])
        assert [v for v, _ in cdf] == [1.0, 2.0, 3.0]
        assert [p for _, p in cdf] == pytest.approx([1 / 3, 2 / 3, 1.0])

    def test_empty_raises(self):
        with pytest.raises(InsufficientDataError):
            empirical_cdf([])

    def test_uniform_draws_close_to_identity(self):
        values = np.random.default_rng(42).uniform(0.0, 1.0, 1000)
        cdf = empirical_cdf(values)
        assert max(abs(p - v) for v, p in cdf) < 0.06


class TestPoolsAndMaps:
    """Tests for fit pools, angular maps and label offsets."""

    def test_glass_pools_with_nlos(self):
        assert fit_pool("NLOS_GLASS") is Scenario.NLOS
        assert fit_pool("los") is Scenario.LOS

    def test_angular_power_map(self, small_grid):
        mpcs = (
            Mpc(10.0, -70.0, Direction(0.0, 0.0), Direction(60.0, 0.0)),
            Mpc(20.0, -70.0, Direction(0.0, 0.0), Direction(60.0, 0.0)),
            Mpc(30.0, -80.0, Direction(-120.0, 0.0), Direction(0.0, 0.0)),
        )
        df = angular_power_map(Padp(mpcs=mpcs), small_grid)
        assert df.shape == (6, 6)
        assert df.loc[0.0, 60.0] == pytest.approx(-66.9897, abs=1e-4)
        assert df.loc[-120.0, 0.0] == pytest.approx(-80.0)
        assert df.loc[60.0, 60.0] == -np.inf

    def test_scenario_offsets(self):
        fit = CimFit.from_params(3.0)
        samples = [
            PathLossSample("a", 10.0, "NLOS", fit.fspl_d0 + 30.0 + 2.0),
            PathLossSample("b", 10.0, "NLOS_GLASS", fit.fspl_d0 + 30.0 - 4.0),
            PathLossSample("c", 10.0, "NLOS_GLASS", fit.fspl_d0 + 30.0 - 6.0),
        ]
        df = scenario_offsets(samples, fit)
        assert list(df["scenario"]) == ["NLOS", "NLOS_GLASS"]
        assert list(df["n_points"]) == [1, 2]
        assert df["mean_residual_db"].tolist() == pytest.approx([2.0, -5.0])
