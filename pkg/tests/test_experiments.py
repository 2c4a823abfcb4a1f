from __future__ import annotations

import json

import numpy as np
import pytest

from freessep.experiments import (
    ConfigError,
    ExperimentConfig,
    HydroReport,
    block_average,
    good_set_check,
    hydro_statistic_density,
    hydro_statistic_density_bruteforce,
    hydro_statistic_interface,
    interface_from_macro,
    replica_seed,
    run_harness_hydro_experiment,
    run_hydro_experiment,
    run_stationary_experiment,
    sample_micro_from_macro,
)
from freessep.io import dumps_json
from freessep.lattice import Interface, ParticleConfig, median
from freessep.macro import MacroDensity, MacroInterface, stationary_profile

from helpers import random_config


@pytest.fixture(scope="module")
def bar():
    return stationary_profile(1.0, 1e-3)


class TestSampling:
    @pytest.mark.parametrize("mode", ["deterministic", "bernoulli"])
    def test_heaviside(self, mode):
        eta = sample_micro_from_macro(MacroDensity.heaviside(), 0.01, mode, seed=3)
        assert eta == ParticleConfig.heaviside(0)

    def test_deterministic_discrepancy(self, bar):
        rho = bar[0]
        for eps in (0.02, 0.01, 0.005):
            eta = sample_micro_from_macro(rho, eps)
            assert hydro_statistic_density(eta, rho, eps) <= 2 * eps

    def test_deterministic_block_averages(self, bar):
        rho, eps, ell = bar[0], 0.01, 10
        eta = sample_micro_from_macro(rho, eps)
        starts, a = block_average(eta, ell)
        from freessep.experiments import block_average_macro

        assert np.max(np.abs(a - block_average_macro(rho, eps, ell, starts))) <= 1 / ell

    def test_bernoulli_reproducible(self, bar):
        a = sample_micro_from_macro(bar[0], 0.01, "bernoulli", seed=5)
        b = sample_micro_from_macro(bar[0], 0.01, "bernoulli", seed=5)
        c = sample_micro_from_macro(bar[0], 0.01, "bernoulli", seed=6)
        assert a == b and a != c

    def test_bad_mode(self, bar):
        with pytest.raises(ValueError):
            sample_micro_from_macro(bar[0], 0.01, "poisson")

    def test_interface_from_macro(self, bar):
        xi = interface_from_macro(MacroInterface.cone(0.0), 0.01)
        assert xi == Interface.cone(0, 0)
        phi = bar[1]
        xi = interface_from_macro(phi, 0.01)
        assert hydro_statistic_interface(xi, phi, 0.01) <= 0.01 + 1e-12


class TestBlocks:
    def test_heaviside(self):
        starts, a = block_average(ParticleConfig.heaviside(1), 4, -4, 4)
        i = list(starts).index(0)
        assert list(a[i - 1 : i + 2]) == [1.0, 0.25, 0.0]

    def test_partition_anchor(self):
        starts, _ = block_average(ParticleConfig.heaviside(0), 5, -7, 12)
        assert np.all(starts % 5 == 0)

    def test_translation(self):
        eta = random_config(np.random.default_rng(0), 30)
        s1, a1 = block_average(eta, 6, -40, 40)
        s2, a2 = block_average(eta.shifted(6), 6, -34, 46)
        np.testing.assert_array_equal(a1, a2[: a1.size] if a2.size >= a1.size else a2)
        assert np.array_equal(s1 + 6, s2[: s1.size])


class TestGoodSet:
    def test_deterministic_sample_is_good(self, bar):
        eta = sample_micro_from_macro(bar[0], 0.01)
        ok, worst, edge = good_set_check(eta, bar[0], 0.01, 0.1, 0.5)
        # rho touches 0 and 1 linearly, so rounding moves each edge by about sqrt(eps / 2)
        assert ok and edge <= 2 * np.sqrt(0.01 / 2) + 0.02

    def test_heaviside_is_not_good(self, bar):
        res = good_set_check(ParticleConfig.heaviside(0), bar[0], 0.01, 0.4, 0.5)
        assert not res.ok
        assert res.boundary_error == pytest.approx(0.51, abs=0.02)

    def test_alpha_monotone(self, bar):
        eta = sample_micro_from_macro(bar[0], 0.01, "bernoulli", seed=1)
        oks = [good_set_check(eta, bar[0], 0.01, a, 0.9).ok for a in (0.8, 0.5, 0.2, 0.05)]
        # larger alpha is a smaller threshold, so passing is monotone as alpha decreases
        assert oks == sorted(oks)

    def test_bad_exponents(self, bar):
        with pytest.raises(ValueError):
            good_set_check(ParticleConfig.heaviside(0), bar[0], 0.01, 0.6, 0.5)


class TestStatistics:
    @pytest.mark.parametrize("seed", range(6))
    def test_density_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        eta = random_config(rng, 8)
        eps = 0.1
        rho = MacroDensity.from_function(lambda r: float(np.clip(0.5 - r, 0, 1)), -0.5, 0.5, 0.1)
        assert hydro_statistic_density(eta, rho, eps) == pytest.approx(hydro_statistic_density_bruteforce(eta, rho, eps), abs=1e-12)

    def test_shift_detected(self, bar):
        rho = bar[0]
        eta = sample_micro_from_macro(rho, 0.01)
        base = hydro_statistic_density(eta, rho, 0.01)
        moved = hydro_statistic_density(eta.shifted(10), rho, 0.01)
        assert moved > base + 0.05

    def test_interface_cone(self):
        assert hydro_statistic_interface(Interface.cone(0, 0), MacroInterface.cone(0.0), 0.01) == 0.0

    @pytest.mark.parametrize("k", [2, 4])
    def test_interface_shift(self, k):
        xi = Interface.cone(0, k)
        assert hydro_statistic_interface(xi, MacroInterface.cone(0.0), 0.01) == pytest.approx(k * 0.01)


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = ExperimentConfig(name="hydro", eps=[0.01, 0.02], seed=4)
        assert cfg.eps == [0.02, 0.01]
        p = tmp_path / "c.json"
        p.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.load(p) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"bogus": 1})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "nope.json")

    @pytest.mark.parametrize("bad", [{"h": 0}, {"eps": []}, {"alpha": 0.6, "beta": 0.5}, {"j": -1}])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            ExperimentConfig(**bad)

    def test_replica_seeds_distinct(self):
        assert len({replica_seed(0, k) for k in range(100)}) == 100


SMALL = dict(j=1.0, eps=[0.1, 0.05], t=0.05, replicas=2, delta0=0.025, n_levels=2, h=2e-3, sandwich_delta=0.025)


class TestRuns:
    def test_hydro_reproducible(self):
        cfg = ExperimentConfig(name="hydro", seed=3, **SMALL)
        a, b = run_hydro_experiment(cfg), run_hydro_experiment(cfg)
        assert dumps_json(a.to_dict()) == dumps_json(b.to_dict())
        assert all(v == 0 for v in a.sandwich_violations)
        assert all(s >= 0 for row in a.density_stats for s in row)
        assert a.barrier_gaps[-1] <= a.barrier_gap_bounds[-1] + 1e-9

    def test_zero_rate(self):
        cfg = ExperimentConfig(name="hydro", seed=1, **{**SMALL, "j": 0.0})
        rep = run_hydro_experiment(cfg)
        assert rep.harness_stats_exact is None
        assert all(v == 0 for v in rep.sandwich_violations)

    def test_report_shape(self):
        rep = HydroReport([0.1], [[0.1, 0.2]], [[0.3, 0.3]], [[True, False]], [0], [0.1], [], [], 0.0, [1, 2])
        d = rep.to_dict()
        assert d["density_medians"] == [pytest.approx(0.15)]

    def test_harness_hydro(self):
        cfg = ExperimentConfig(name="harness-hydro", **SMALL)
        out = run_harness_hydro_experiment(cfg)
        assert len(out["harness_stats"]) == 2 and out["harness_stats_exact"] is not None

    def test_stationary(self):
        cfg = ExperimentConfig(name="stationary", j=1.0, delta=0.01, T=0.05, h=2e-3)
        out = run_stationary_experiment(cfg)
        assert out["barrier_gap"] <= 2 * 0.01 + 1e-9
        assert out["interface_distance_lower"] <= 2 * 0.01 + 1e-9
