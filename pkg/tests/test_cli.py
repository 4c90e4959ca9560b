"""
Tests for the command-line front end.
"""

import json
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from ingest import parse_fit_report, parse_mpcs, write_mpcs, write_pathloss_table
from model import CimFit, Padp
from synth import gen_pathloss_samples

SPEC = {
    "seed": 7,
    "n_bins": 256,
    "noise_floor_dbm": -120,
    "grid": {"azimuths": [-120, 0, 120], "elevations": [0]},
    "links": [
        {"link_id": "TX1-RX01", "distance": 10.0, "scenario": "LOS", "n_mpcs": 3,
         "delay_spread_target": 5.0, "min_separation": 4.0, "model": {"type": "cim", "n": 2.0}},
        {"link_id": "TX1-RX02", "distance": 20.0, "scenario": "LOS", "n_mpcs": 3,
         "delay_spread_target": 5.0, "min_separation": 4.0, "model": {"type": "cim", "n": 2.0}},
        {"link_id": "TX2-RX03", "distance": 25.0, "scenario": "NLOS", "n_mpcs": 3,
         "delay_spread_target": 5.0, "min_separation": 4.0, "model": {"type": "cim", "n": 3.0}},
    ],
}


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SPEC))
    return path


@pytest.fixture
def campaign(tmp_path, spec_file):
    out = tmp_path / "campaign"
    assert main(["synth", "--spec", str(spec_file), "--out-dir", str(out)]) == EXIT_OK
    return out


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestUsage:
    """Tests for argument handling and exit codes."""

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_flag(self, tmp_path):
        assert main(["fit", "x.csv", "--out", str(tmp_path / "f.csv"), "--colour"]) == EXIT_USAGE

    def test_synth_needs_a_source(self, tmp_path):
        assert main(["synth", "--out-dir", str(tmp_path)]) == EXIT_USAGE

    def test_synth_rejects_two_sources(self, tmp_path, spec_file):
        assert main(["synth", "--spec", str(spec_file), "--library", "--out-dir", str(tmp_path)]) == EXIT_USAGE

    def test_bad_jobs(self, tmp_path, spec_file):
        assert main(["synth", "--spec", str(spec_file), "--out-dir", str(tmp_path), "--jobs", "0"]) == EXIT_USAGE

    def test_help(self):
        assert main(["--help"]) == EXIT_OK


class TestSynth:
    """Tests for the synth command."""

    def test_writes_sweeps_truth_and_index(self, campaign, capsys):
        names = sorted(p.name for p in campaign.iterdir())
        assert names == [
            "TX1-RX01.sweep", "TX1-RX01.truth.csv", "TX1-RX02.sweep", "TX1-RX02.truth.csv",
            "TX2-RX03.sweep", "TX2-RX03.truth.csv", "index.csv",
        ]
        assert (campaign / "index.csv").read_text().startswith("path,link_id,tx_id,rx_id,distance_m,scenario\n")

    def test_byte_deterministic(self, tmp_path, spec_file, campaign):
        again = tmp_path / "again"
        assert main(["synth", "--spec", str(spec_file), "--out-dir", str(again), "--jobs", "3"]) == EXIT_OK
        assert _tree(again) == _tree(campaign)

    def test_seed_flag_overrides_spec(self, tmp_path, spec_file, campaign):
        reseeded = tmp_path / "reseeded"
        assert main(["synth", "--spec", str(spec_file), "--seed", "8", "--out-dir", str(reseeded)]) == EXIT_OK
        assert _tree(reseeded) != _tree(campaign)

        spec_8 = tmp_path / "spec8.json"
        spec_8.write_text(json.dumps({**SPEC, "seed": 8}))
        direct = tmp_path / "direct"
        assert main(["synth", "--spec", str(spec_8), "--out-dir", str(direct)]) == EXIT_OK
        assert _tree(reseeded) == _tree(direct)

    def test_empty_spec(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"links": []}))
        assert main(["synth", "--spec", str(path), "--out-dir", str(tmp_path / "out")]) == EXIT_DATA

    def test_missing_spec_file(self, tmp_path):
        assert main(["synth", "--spec", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == EXIT_DATA


class TestExtract:
    """Tests for the extract command."""

    def test_extracts_strongest_path(self, tmp_path, campaign):
        out = tmp_path / "mpcs"
        table = tmp_path / "pathloss.csv"
        sweeps = sorted(str(p) for p in campaign.glob("*.sweep"))
        code = main(["extract", *sweeps, "--out-dir", str(out), "--pathloss-out", str(table)])
        assert code == EXIT_OK

        for name in ("TX1-RX01", "TX1-RX02", "TX2-RX03"):
            truth = parse_mpcs((campaign / f"{name}.truth.csv").read_bytes())
            found = parse_mpcs((out / f"{name}.mpc.csv").read_bytes())
            strongest = max(truth, key=lambda m: m.power)
            assert any(
                abs(m.tau - strongest.tau) <= 0.33 and abs(m.power - strongest.power) <= 0.5
                for m in found
            )
            assert found.meta.link_id == name
        assert len(table.read_text().splitlines()) == 4

    def test_missing_file(self, tmp_path):
        assert main(["extract", str(tmp_path / "gone.sweep"), "--out-dir", str(tmp_path)]) == EXIT_DATA

    def test_one_bad_file_fails_run(self, tmp_path, campaign):
        bad = tmp_path / "bad.sweep"
        bad.write_bytes(b"nonsense\n")
        out = tmp_path / "mpcs"
        code = main(["extract", str(campaign / "TX1-RX01.sweep"), str(bad), "--out-dir", str(out)])
        assert code == EXIT_DATA
        assert (out / "TX1-RX01.mpc.csv").is_file()


class TestFit:
    """Tests for the fit command."""

    def _table(self, tmp_path, sigma, distances=(10.0, 20.0, 30.0, 40.0, 50.0)):
        path = tmp_path / "pathloss.csv"
        samples = gen_pathloss_samples(CimFit.from_params(2.11), list(distances), sigma=sigma, seed=5)
        path.write_bytes(write_pathloss_table(samples))
        return path

    def test_noiseless_exponent(self, tmp_path):
        out = tmp_path / "fits.csv"
        assert main(["fit", str(self._table(tmp_path, 0.0)), "--out", str(out), "--model", "cim"]) == EXIT_OK
        report = parse_fit_report(out.read_bytes())
        assert report["param1"].iloc[0] == pytest.approx(2.11, abs=1e-4)
        assert (tmp_path / "fits.residuals.csv").is_file()

    def test_both_models(self, tmp_path):
        out = tmp_path / "fits.csv"
        assert main(["fit", str(self._table(tmp_path, 4.0)), "--out", str(out)]) == EXIT_OK
        report = parse_fit_report(out.read_bytes()).set_index("model")
        assert report.loc["FIM", "sigma_db"] <= report.loc["CIM", "sigma_db"] + 1e-6

    def test_single_distance(self, tmp_path):
        table = self._table(tmp_path, 1.0, distances=(15.0, 15.0, 15.0))
        assert main(["fit", str(table), "--out", str(tmp_path / "fits.csv")]) == EXIT_DATA

    def test_scenario_filter_without_matches(self, tmp_path):
        table = self._table(tmp_path, 0.0)
        assert main(["fit", str(table), "--out", str(tmp_path / "f.csv"), "--scenario", "NLOS"]) == EXIT_DATA


class TestStats:
    """Tests for the stats command."""

    def test_rows_cdf_and_svg(self, tmp_path, campaign):
        truths = sorted(str(p) for p in campaign.glob("*.truth.csv"))
        empty = tmp_path / "empty.mpc.csv"
        empty.write_bytes(write_mpcs(Padp()))
        out, cdf, svg = tmp_path / "stats.csv", tmp_path / "cdf.csv", tmp_path / "cdf.svg"
        code = main(["stats", *truths, str(empty), "--out", str(out), "--cdf-out", str(cdf), "--svg", str(svg)])
        assert code == EXIT_OK
        assert len(out.read_text().splitlines()) == 4
        assert cdf.read_text().startswith("pool,value,probability\n")
        text = svg.read_text()
        assert 'id="cdf-1"' in text
        assert 'id="cdf-2"' not in text


class TestReport:
    """Tests for the report command."""

    def test_full_report(self, tmp_path, campaign):
        out = tmp_path / "report"
        assert main(["report", str(campaign), "--out-dir", str(out), "--padp-maps"]) == EXIT_OK
        for name in ("pathloss.csv", "stats.csv", "cdf.csv", "rms_cdf.svg", "fits.csv", "fit_lines.csv",
                     "residuals.csv", "label_offsets.csv", "pathloss.svg", "maps/TX1-RX01.padp_map.csv"):
            assert (out / name).is_file(), name
        fits = parse_fit_report((out / "fits.csv").read_bytes())
        assert set(fits["scenario"]) == {"LOS"}
        svg = (out / "pathloss.svg").read_text()
        assert "LOS path loss" in svg
        assert "NLOS path loss" in svg

    def test_deterministic(self, tmp_path, campaign):
        first, second = tmp_path / "r1", tmp_path / "r2"
        assert main(["report", str(campaign), "--out-dir", str(first)]) == EXIT_OK
        assert main(["report", str(campaign), "--out-dir", str(second), "--jobs", "2"]) == EXIT_OK
        assert _tree(first) == _tree(second)

    def test_corrupt_file_skipped(self, tmp_path, campaign):
        (campaign / "TX1-RX02.sweep").write_bytes(b"broken\n")
        out = tmp_path / "report"
        assert main(["report", str(campaign), "--out-dir", str(out)]) == EXIT_OK
        assert len((out / "pathloss.csv").read_text().splitlines()) == 3

    def test_skipped_files_are_reported(self, tmp_path, campaign, capsys):
        (campaign / "TX1-RX02.sweep").write_bytes(b"broken\n")
        capsys.readouterr()
        assert main(["report", str(campaign), "--out-dir", str(tmp_path / "report")]) == EXIT_OK
        err = capsys.readouterr().err
        assert "1 input file(s) left out" in err
        assert "TX1-RX02.sweep" in err

    def test_all_corrupt(self, tmp_path, campaign):
        for path in campaign.glob("*.sweep"):
            path.write_bytes(b"broken\n")
        assert main(["report", str(campaign), "--out-dir", str(tmp_path / "report")]) == EXIT_DATA

    def test_missing_directory(self, tmp_path):
        assert main(["report", str(tmp_path / "nowhere"), "--out-dir", str(tmp_path / "r")]) == EXIT_DATA
