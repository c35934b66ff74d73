import json

import numpy as np
import pytest

from nilm_limits.detection import pairwise_conditional_success, pairwise_success_probability
from nilm_limits.errors import ConfigError, TooShort
from nilm_limits.experiments import (
    CLOSED_FORM,
    COLUMNS,
    MONTE_CARLO,
    ExperimentConfig,
    SweepRow,
    SweepTable,
    config_from_mapping,
    load_config,
    pairwise_table,
    preset_scenarios,
    pulse_pair,
    run_magnitude_sweep,
    run_noise_sweep,
    run_nway_sweep,
    run_rate_sweep,
    stand_in_library,
)
from nilm_limits.montecarlo import McConfig
from nilm_limits.noise import NoiseModel
from nilm_limits.signals import Component, PulseSource, ScenarioSet, ScenarioSpec

from oracles import Phi


def _pair(a0, a1, onset=1, duration=2, length=12):
    return pulse_pair((a0, a1), duration, onset, length)


def _points(values, length=1):
    specs = tuple(ScenarioSpec(f"s{i}", (Component(PulseSource(v, 0, 1)),)) for i, v in enumerate(values))
    return ScenarioSet(length, 12.0, specs, {})


class TestStandIns:
    def test_library_shapes(self):
        lib = stand_in_library()
        assert {len(s) for s in lib.values()} == {1200}
        toaster = lib["toaster"].samples
        assert toaster.max() == 6.0 and np.count_nonzero(toaster) == 720

    def test_presets(self):
        assert preset_scenarios("toaster-vs-kettle").names == ["toaster", "kettle"]
        assert len(preset_scenarios("six-devices").names) == 6
        with pytest.raises(ConfigError):
            preset_scenarios("fridge")


class TestNoiseSweep:
    def test_vanishing_noise(self):
        cfg = ExperimentConfig(_pair(0.0, 2.0), sigma2=(1e-12,))
        assert run_noise_sweep(cfg).rows[0].probability >= 1 - 1e-9

    def test_huge_noise(self):
        cfg = ExperimentConfig(_pair(0.0, 2.0), sigma2=(1e12,))
        assert abs(run_noise_sweep(cfg).rows[0].probability - 0.5) <= 1e-3

    def test_identical(self):
        cfg = ExperimentConfig(_pair(1.0, 1.0), sigma2=(1e-6, 1.0, 1e6))
        assert list(run_noise_sweep(cfg).column("probability")) == [0.5, 0.5, 0.5]

    def test_monotone_and_exact(self):
        table = run_noise_sweep(ExperimentConfig(preset_scenarios("toaster-vs-nothing")))
        p = table.column("probability")
        assert np.all(np.diff(p) <= 0)
        assert list(table.column("x")) == sorted(table.column("x"))
        assert {r.method for r in table.rows} == {CLOSED_FORM}
        assert not table.column("std_error").any()

    def test_values_match_closed_form(self):
        # d = 2*sqrt(2) for this pulse pair
        table = run_noise_sweep(ExperimentConfig(_pair(0.0, 2.0), sigma2=(4.0, 1.0)))
        np.testing.assert_allclose(table.column("probability"), [Phi(2 ** 0.5), Phi(2 ** 0.5 / 2)], atol=1e-14)

    def test_needs_two(self):
        with pytest.raises(ConfigError):
            run_noise_sweep(ExperimentConfig(preset_scenarios("six-devices")))

    def test_covariance_is_scaled(self):
        cov = np.diag([1.0, 4.0])
        cfg = ExperimentConfig(_points([0.0, 1.0], 2), sigma2=(1.0, 0.25), covariance=cov)
        # separation lies on the unit-variance axis
        np.testing.assert_allclose(run_noise_sweep(cfg).column("probability"), [Phi(1.0), Phi(0.5)], atol=1e-14)


class TestPairwiseTable:
    def test_mc_row_tracks_closed_form(self):
        cfg = ExperimentConfig(_pair(0.0, 0.5), sigma2=(1.0,), mc=McConfig(100_000, seed=3))
        exact, mc = pairwise_table(cfg).rows
        assert exact.method == CLOSED_FORM and mc.method == MONTE_CARLO
        assert abs(mc.probability - exact.probability) <= 4 * mc.std_error


class TestRateSweep:
    def test_k1_equals_closed_form(self):
        s = preset_scenarios("toaster-vs-kettle")
        cfg = ExperimentConfig(s, sigma2=(1e4,), decimation=(1, 2), mc=McConfig(2000))
        row = run_rate_sweep(cfg).rows[0]
        m0, m1 = s.means()
        assert row.method == CLOSED_FORM
        assert row.probability == pairwise_success_probability(m0, m1, NoiseModel.isotropic(1e4))

    def test_identical_is_chance(self):
        cfg = ExperimentConfig(_pair(1.0, 1.0, length=24), decimation=(1, 2, 4), mc=McConfig(50_000, seed=2))
        for row in run_rate_sweep(cfg).rows:
            assert abs(row.probability - 0.5) <= 4 * max(row.std_error, 1e-12)

    def test_nonincreasing(self):
        cfg = ExperimentConfig(pulse_pair((0.0, 0.3), 24, 12, 96), decimation=(1, 2, 4),
                               mc=McConfig(50_000, seed=5))
        rows = run_rate_sweep(cfg).rows
        for a, b in zip(rows, rows[1:]):
            assert b.probability <= a.probability + 1.96 * np.hypot(a.std_error, b.std_error)

    def test_too_short(self):
        with pytest.raises(TooShort):
            run_rate_sweep(ExperimentConfig(_pair(0.0, 1.0, length=4, duration=1), decimation=(1, 8)))

    def test_rejects_covariance(self):
        with pytest.raises(ConfigError):
            run_rate_sweep(ExperimentConfig(_points([0.0, 1.0]), covariance=np.eye(1)))


class TestNwaySweep:
    def test_two_devices_match_conditionals(self):
        s = _points([0.0, 1.0], 1)
        cfg = ExperimentConfig(s, sigma2=(0.5,), prior=(0.3, 0.7), mc=McConfig(200_000, seed=1))
        table = run_nway_sweep(cfg)
        m0, m1 = s.means()
        c = pairwise_conditional_success(m0, m1, NoiseModel.isotropic(0.5), [0.3, 0.7])
        for name, truth in zip(("s0", "s1"), c):
            row, = [r for r in table.rows if r.series == name]
            assert abs(row.probability - truth) <= 4 * row.std_error

    def test_chance_limit(self):
        cfg = ExperimentConfig(preset_scenarios("six-devices"), sigma2=(1e14,), mc=McConfig(20_000, seed=4))
        overall, = [r for r in run_nway_sweep(cfg).rows if r.series == "overall"]
        assert abs(overall.probability - 1 / 6) <= 4 * overall.std_error

    def test_collinear(self):
        cfg = ExperimentConfig(_points([0.0, 1.0, 2.0]), sigma2=(1.0,), mc=McConfig(200_000, seed=6))
        overall, = [r for r in run_nway_sweep(cfg).rows if r.series == "overall"]
        assert overall.ci_low <= 0.58861661503201747 <= overall.ci_high

    def test_series_column(self):
        cfg = ExperimentConfig(_points([0.0, 1.0]), sigma2=(1.0, 2.0), mc=McConfig(100))
        text = run_nway_sweep(cfg).to_csv()
        header, *lines = text.splitlines()
        assert header == ",".join(COLUMNS) + ",series"
        assert [ln.rsplit(",", 1)[1] for ln in lines] == ["s0", "s1", "overall"] * 2


class TestMagnitudeSweep:
    def test_identity_example(self):
        cfg = ExperimentConfig(_points([0.0, 1.0]), system_matrix=np.eye(3), magnitudes=(1.0,))
        assert run_magnitude_sweep(cfg).rows[0].probability == pytest.approx(0.84573123063700655, abs=1e-12)

    def test_zero_magnitude(self):
        cfg = ExperimentConfig(_points([0.0, 1.0]), system_matrix=np.eye(2), magnitudes=(0.0,), prior_null=0.3)
        assert run_magnitude_sweep(cfg).rows[0].probability == pytest.approx(0.3 + 0.5 * 0.7, abs=1e-15)

    def test_strictly_increasing(self):
        cfg = ExperimentConfig(_points([0.0, 1.0]), system_matrix=np.eye(2), magnitudes=(2.0, 0.0, 1.0))
        table = run_magnitude_sweep(cfg)
        assert list(table.column("x")) == [0.0, 1.0, 2.0]
        assert np.all(np.diff(table.column("probability")) > 0)

    def test_default_matrix_from_means(self):
        table = run_magnitude_sweep(ExperimentConfig(preset_scenarios("six-devices")))
        M = np.column_stack([m.mean for m in preset_scenarios("six-devices").means()])
        assert table.metadata["sigma_max"] == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-12)
        assert np.all((table.column("probability") >= 0) & (table.column("probability") <= 1))


class TestTables:
    def test_csv_header_and_repr(self):
        table = SweepTable([SweepRow.exact(0.1, 1 / 3)], {})
        header, line = table.to_csv().splitlines()
        assert header == "x,probability,std_error,ci_low,ci_high,method"
        assert float(line.split(",")[1]) == 1 / 3

    def test_json_mirrors_rows(self):
        cfg = ExperimentConfig(_pair(0.0, 1.0), sigma2=(1.0,), mc=McConfig(1000, seed=9))
        doc = json.loads(pairwise_table(cfg).to_json())
        assert doc["metadata"]["seed"] == 9 and doc["metadata"]["samples"] == 1000
        assert len(doc["metadata"]["config_hash"]) == 64
        assert set(doc["rows"][0]) == set(COLUMNS)

    def test_reruns_identical(self):
        cfg = ExperimentConfig(_pair(0.0, 0.4, length=24), decimation=(1, 2, 4), mc=McConfig(5000, seed=11))
        assert run_rate_sweep(cfg).to_csv() == run_rate_sweep(cfg).to_csv()


class TestConfig:
    def test_inline_scenarios(self, tmp_path):
        doc = {
            "scenarios": {"T": 4, "scenarios": [
                {"name": "off", "components": []},
                {"name": "on", "components": [{"source": {"pulse": {"amplitude": 1, "onset": 0, "duration": 2}}}]},
            ]},
            "sigma2": [1, 2], "samples": 10, "seed": 3, "format": "json",
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        cfg = load_config(path)
        assert cfg.sigma2 == (1.0, 2.0) and cfg.mc.samples == 10 and cfg.format == "json"
        assert cfg.scenarios.names == ["off", "on"]

    def test_overrides_win(self):
        cfg = config_from_mapping({"sigma2": 5, "seed": 1}, ".", {"seed": 7, "preset": "toaster-vs-nothing"})
        assert cfg.mc.seed == 7 and cfg.sigma2 == (5.0,)
        assert cfg.scenarios.names == ["nothing", "toaster"]

    @pytest.mark.parametrize("doc", [
        {"sigma2": []},
        {"sigma2": [-1]},
        {"decimation": [0]},
        {"magnitudes": [-0.1]},
        {"prior_null": 2},
        {"format": "xml"},
        {"colour": "blue"},
        {"scenarios": 5},
        {"samples": "many"},
    ])
    def test_invalid(self, doc):
        with pytest.raises(ConfigError):
            config_from_mapping(doc)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_prior_length_checked(self):
        cfg = config_from_mapping({"prior": [1, 2, 3]})
        with pytest.raises(ConfigError):
            run_noise_sweep(cfg)

    def test_hash_ignores_workers(self):
        a = config_from_mapping({"workers": 1})
        b = config_from_mapping({"workers": 4})
        assert a.digest() == b.digest()
        assert a.digest() != config_from_mapping({"seed": 1}).digest()
