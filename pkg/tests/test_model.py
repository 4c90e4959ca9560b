"""
Unit tests for domain types and physical helpers.
"""

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from model import (
    SPEED_OF_LIGHT,
    AngleGrid,
    AntennaPattern,
    CimFit,
    CorrectionParams,
    Direction,
    DirectionalPdp,
    FimFit,
    LinkMeta,
    Mpc,
    Padp,
    PathLossSample,
    Scenario,
    ScenarioSpec,
    SounderConfig,
    SweepRecord,
    antenna_gain,
    db_from_linear,
    fspl,
    linear_from_db,
    parse_scenario,
    wrap_degrees,
)
from validation import DomainError, SpecError, ValidationError


class TestFspl:
    """Tests for free-space path loss."""

    def test_reference_distance_at_28ghz(self):
        assert fspl(28e9, 1.0) == pytest.approx(61.385, abs=0.01)

    def test_matches_friis_by_hand(self):
        expected = 20 * math.log10(4 * math.pi * 20.0 * 28e9 / 299792458.0)
        assert fspl(28e9, 20.0) == pytest.approx(expected, abs=1e-12)

    def test_one_decade_adds_20_db(self):
        assert fspl(28e9, 10.0) - fspl(28e9, 1.0) == pytest.approx(20.0)

    @pytest.mark.parametrize("freq,dist", [(0, 1.0), (28e9, 0), (-1, 1.0), (28e9, -5)])
    def test_non_positive_arguments_raise(self, freq, dist):
        with pytest.raises(DomainError):
            fspl(freq, dist)


class TestDbConversions:
    """Tests for dBm/mW conversions."""

    def test_known_values(self):
        assert db_from_linear(1.0) == 0.0
        assert db_from_linear(1e-7) == pytest.approx(-70.0)
        assert linear_from_db(-70.0) == pytest.approx(1e-7)

    def test_arrays(self):
        out = db_from_linear(np.array([1.0, 10.0, 100.0]))
        np.testing.assert_allclose(out, [0.0, 10.0, 20.0])

    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_non_positive_linear_raises(self, value):
        with pytest.raises(DomainError):
            db_from_linear(value)

    @given(st.floats(min_value=-190, max_value=60))
    def test_round_trip(self, dbm):
        assert db_from_linear(linear_from_db(dbm)) == pytest.approx(dbm, abs=1e-9)


class TestAntennaGain:
    """Tests for the horn gain model."""

    def test_boresight_is_peak(self, pattern):
        assert antenna_gain(pattern, 0.0, 0.0) == pattern.peak_gain

    def test_half_beamwidth_is_3db_down(self, pattern):
        assert antenna_gain(pattern, pattern.hpbw_az / 2, 0.0) == pytest.approx(pattern.peak_gain - 3.0)
        assert antenna_gain(pattern, 0.0, pattern.hpbw_el / 2) == pytest.approx(pattern.peak_gain - 3.0)

    def test_far_off_axis_hits_floor(self, pattern):
        assert antenna_gain(pattern, 180.0, 0.0) == pattern.floor_gain

    def test_offset_wraps(self, pattern):
        assert antenna_gain(pattern, 350.0, 0.0) == pytest.approx(antenna_gain(pattern, -10.0, 0.0))

    def test_vectorized(self, pattern):
        gains = antenna_gain(pattern, np.array([0.0, 12.0, 90.0]), np.zeros(3))
        assert gains.shape == (3,)
        assert gains[0] > gains[1] > gains[2]


class TestDirection:
    """Tests for Direction construction and gating."""

    def test_in_range_azimuth_kept_exactly(self):
        assert Direction(-167.98, 0.0).az == -167.98

    def test_out_of_range_azimuth_wrapped(self):
        assert Direction(190.0, 0.0).az == pytest.approx(-170.0)
        assert Direction(180.0, 0.0).az == -180.0

    def test_elevation_out_of_range_raises(self):
        with pytest.raises(ValidationError):
            Direction(0.0, 91.0)

    def test_non_finite_raises(self):
        with pytest.raises(ValidationError):
            Direction(float("nan"), 0.0)

    def test_within_gate_wraps_azimuth(self):
        assert Direction(-175.0, 0.0).within(Direction(175.0, 0.0), 20.0)
        assert not Direction(0.0, 0.0).within(Direction(30.0, 0.0), 20.0)
        assert not Direction(0.0, 0.0).within(Direction(0.0, 25.0), 20.0)

    def test_seam_neighbours_within_gap_gate(self):
        grid = AngleGrid.default()
        first, last = Direction(grid.azimuths[0], 0.0), Direction(grid.azimuths[-1], 0.0)
        assert first.within(last, grid.az_max_gap)
        assert not first.within(last, 20.0)

    def test_wrap_degrees(self):
        assert wrap_degrees(190.0) == pytest.approx(-170.0)
        assert wrap_degrees(-180.0) == -180.0


class TestAngleGrid:
    """Tests for the beam grid."""

    def test_default_grid(self):
        grid = AngleGrid.default()
        assert len(grid.azimuths) == 19
        assert grid.elevations == (-20.0, 0.0, 20.0)
        assert grid.azimuths[0] == -167.98
        assert grid.azimuths[-1] == 167.98
        assert len(grid) == 57
        assert grid.az_step == pytest.approx(335.96 / 18, abs=1e-3)
        assert grid.az_max_gap == pytest.approx(360.0 - 335.96, abs=1e-9)

    @pytest.mark.parametrize("azimuths, gap", [
        ((0.0, 90.0), 90.0),
        ((-120.0, 0.0, 120.0), 120.0),
        ((0.0, 10.0, 20.0, 30.0), 10.0),
        ((5.0,), 360.0),
    ])
    def test_az_max_gap(self, azimuths, gap):
        assert AngleGrid(azimuths=azimuths, elevations=(0.0,)).az_max_gap == pytest.approx(gap)

    def test_directions_elevation_major(self):
        grid = AngleGrid(azimuths=(0.0, 90.0), elevations=(-20.0, 20.0))
        assert grid.directions() == (
            Direction(0.0, -20.0), Direction(90.0, -20.0),
            Direction(0.0, 20.0), Direction(90.0, 20.0),
        )

    def test_index_of(self):
        grid = AngleGrid(azimuths=(0.0, 90.0), elevations=(-20.0, 20.0))
        assert grid.index_of(Direction(90.0, 20.0)) == 3
        assert grid.index_of(Direction(45.0, 20.0)) is None
        assert grid.contains(Direction(0.0, -20.0))

    @pytest.mark.parametrize("azimuths", [(), (10.0, 0.0), (0.0, 0.0), (0.0, 180.0)])
    def test_invalid_azimuths_raise(self, azimuths):
        with pytest.raises(ValidationError):
            AngleGrid(azimuths=azimuths, elevations=(0.0,))


class TestSounderConfig:
    """Tests for sounder configuration."""

    def test_defaults(self):
        config = SounderConfig()
        assert config.delay_bin == 0.651
        assert config.max_measurable_pl == 185.0

    def test_inconsistent_delay_bin_raises(self):
        with pytest.raises(ValidationError):
            SounderConfig(delay_bin=1.0)

    def test_non_positive_bandwidth_raises(self):
        with pytest.raises(ValidationError):
            SounderConfig(bandwidth=0.0)


class TestScenario:
    """Tests for scenario labels."""

    def test_glass_pools_with_nlos(self):
        assert Scenario.NLOS_GLASS.pool is Scenario.NLOS
        assert Scenario.LOS.pool is Scenario.LOS

    @pytest.mark.parametrize("label,expected", [
        ("los", Scenario.LOS),
        ("NLOS", Scenario.NLOS),
        ("nlos-glass", Scenario.NLOS_GLASS),
        (Scenario.NLOS_GLASS, Scenario.NLOS_GLASS),
    ])
    def test_parse(self, label, expected):
        assert parse_scenario(label) is expected

    def test_unknown_label_raises(self):
        with pytest.raises(ValidationError, match="Unknown scenario"):
            parse_scenario("outdoor")


class TestLinkMeta:
    """Tests for link metadata."""

    def test_scenario_string_parsed(self):
        meta = LinkMeta(link_id="TX5-RX19", distance=21.0, scenario="nlos_glass")
        assert meta.scenario is Scenario.NLOS_GLASS
        assert meta.tx_height == 1.8
        assert meta.rx_height == 1.5

    @pytest.mark.parametrize("link_id", ["", "bad id", "a/b"])
    def test_bad_link_id_raises(self, link_id):
        with pytest.raises(ValidationError):
            LinkMeta(link_id=link_id, distance=10.0, scenario="LOS")

    def test_non_positive_distance_raises(self):
        with pytest.raises(ValidationError):
            LinkMeta(link_id="L1", distance=0.0, scenario="LOS")


class TestSweepRecord:
    """Tests for sweep invariants."""

    def test_samples_are_read_only(self, boresight):
        pdp = DirectionalPdp(boresight, boresight, 0.0, [-100.0, -90.0])
        with pytest.raises(ValueError):
            pdp.samples[0] = 0.0

    def test_valid_record(self, small_grid, make_sweep):
        rec = make_sweep(small_grid, {(0, 0): [-100.0] * 8, (0, 1): [-100.0] * 8})
        assert rec.n_bins == 8
        rec.validate()

    def test_off_grid_direction_raises(self, small_grid, config, pattern, meta):
        pdp = DirectionalPdp(Direction(30.0, 0.0), Direction(0.0, 0.0), 0.0, [-100.0] * 4)
        with pytest.raises(ValidationError, match="not on the grid"):
            SweepRecord(config, pattern, small_grid, meta, (pdp,))

    def test_duplicate_pair_raises(self, small_grid, config, pattern, meta, boresight):
        pdp = DirectionalPdp(boresight, boresight, 0.0, [-100.0] * 4)
        with pytest.raises(ValidationError, match="duplicate"):
            SweepRecord(config, pattern, small_grid, meta, (pdp, pdp))

    def test_length_mismatch_raises(self, small_grid, make_sweep):
        with pytest.raises(ValidationError, match="length"):
            make_sweep(small_grid, {(0, 0): [-100.0] * 8, (0, 1): [-100.0] * 7})

    def test_power_below_guard_raises(self, small_grid, make_sweep):
        # guard = -10 + 34 - 185 - 20 = -181 dBm
        with pytest.raises(ValidationError, match="guard"):
            make_sweep(small_grid, {(0, 0): [-182.0] * 4})

    def test_empty_record_fails_full_validation(self, small_grid, config, pattern, meta):
        rec = SweepRecord(config, pattern, small_grid, meta, ())
        with pytest.raises(ValidationError, match="no PDPs"):
            rec.validate(require_pdps=True)


class TestMpcAndPadp:
    """Tests for MPC containers."""

    def test_power_floor(self, boresight):
        with pytest.raises(ValidationError):
            Mpc(tau=1.0, power=-200.0, aod=boresight, aoa=boresight)

    def test_negative_delay_raises(self, boresight):
        with pytest.raises(ValidationError):
            Mpc(tau=-0.1, power=-70.0, aod=boresight, aoa=boresight)

    def test_padp_must_be_sorted(self, boresight):
        a = Mpc(5.0, -70.0, boresight, boresight)
        b = Mpc(1.0, -70.0, boresight, boresight)
        with pytest.raises(ValidationError):
            Padp(mpcs=(a, b))

    def test_padp_arrays(self, boresight):
        padp = Padp(mpcs=(Mpc(1.0, -70.0, boresight, boresight), Mpc(5.0, -80.0, boresight, boresight)))
        assert len(padp) == 2
        np.testing.assert_array_equal(padp.taus, [1.0, 5.0])
        np.testing.assert_array_equal(padp.powers, [-70.0, -80.0])


class TestFitTypes:
    """Tests for fitted model containers."""

    def test_cim_fills_reference_loss(self):
        fit = CimFit.from_params(2.11)
        assert fit.fspl_d0 == pytest.approx(fspl(28e9, 1.0))

    def test_cim_inconsistent_reference_raises(self):
        with pytest.raises(ValidationError):
            CimFit(n=2.0, sigma=0.0, fspl_d0=50.0)

    def test_negative_sigma_raises(self):
        with pytest.raises(ValidationError):
            FimFit(alpha=60.0, beta=2.0, sigma=-1.0)

    def test_path_loss_sample_bounds(self):
        with pytest.raises(ValidationError):
            PathLossSample(link_id="L1", distance=10.0, scenario="LOS", path_loss=250.0)
        with pytest.raises(ValidationError):
            PathLossSample(link_id="L1", distance=10.0, scenario="LOS", path_loss=0.0)

    def test_correction_identity(self):
        assert CorrectionParams().is_identity
        assert not CorrectionParams(drift_rate=1e-9).is_identity
        with pytest.raises(ValidationError):
            CorrectionParams(phase_center_radius=-0.1)


class TestScenarioSpec:
    """Tests for synthesis specs."""

    def _spec(self, **overrides):
        values = dict(distance=30.0, scenario="LOS", n_mpcs=5,
                      pl_model=CimFit.from_params(2.0), delay_spread_target=10.0)
        values.update(overrides)
        return ScenarioSpec(**values)

    def test_valid_spec(self):
        spec = self._spec()
        assert spec.meta.distance == 30.0
        assert spec.meta.scenario is Scenario.LOS

    def test_single_mpc_with_spread_raises(self):
        with pytest.raises(SpecError):
            self._spec(n_mpcs=1, delay_spread_target=5.0)

    def test_single_mpc_without_spread(self):
        assert self._spec(n_mpcs=1, delay_spread_target=0.0).n_mpcs == 1

    def test_many_mpcs_need_spread(self):
        with pytest.raises(SpecError):
            self._spec(delay_spread_target=0.0)

    def test_zero_mpcs_raises(self):
        with pytest.raises(SpecError):
            self._spec(n_mpcs=0)

    def test_bad_model_raises(self):
        with pytest.raises(SpecError):
            self._spec(pl_model="cim")

    def test_light_speed_constant(self):
        assert SPEED_OF_LIGHT == 299792458.0
