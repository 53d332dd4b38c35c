import math
from dataclasses import replace

import numpy as np
import pytest

from heraldsim import estimators, montecarlo, optics
from heraldsim.montecarlo import CountRecord, TrialConfig
from heraldsim.optics import BeamSplitterCoeffs, DetectorParams, MemoryParams
from heraldsim.photon_stats import SourceParams

PAPER_BS = BeamSplitterCoeffs(0.479, 0.422, 0.482, 0.409)


def boosted_config(**overrides) -> TrialConfig:
    base = dict(
        source=SourceParams(3e-3, 10.0),
        memory_a=MemoryParams(0.3, 0.3),
        memory_b=MemoryParams(0.3, 0.3),
        heralding_efficiency=1.0,
        bs=PAPER_BS,
        det1=DetectorParams(0.5),
        det2=DetectorParams(0.5),
        idler_det=DetectorParams(0.5),
        trials=200_000,
        seed=21,
    )
    base.update(overrides)
    return TrialConfig(**base)


def _pull(mc_value, expected):
    return (mc_value - expected) / math.sqrt(max(expected, 1.0))


class TestRunTrials:
    def test_zero_pump_all_zero(self):
        cfg = boosted_config(source=SourceParams(3e-3, 0.0), trials=50_000)
        rec = montecarlo.run_trials(cfg)
        assert rec.n_heralds == 0
        assert rec.n1_given_h == 0
        assert rec.n_signal_singles == 0

    def test_deterministic_across_worker_counts(self):
        cfg = boosted_config(trials=130_000)
        r1 = montecarlo.run_trials(cfg, workers=1)
        r8 = montecarlo.run_trials(cfg, workers=8)
        assert r1 == r8

    def test_worker_env_variable(self, monkeypatch):
        cfg = boosted_config(trials=70_000)
        base = montecarlo.run_trials(cfg)
        monkeypatch.setenv("HERALDSIM_THREADS", "4")
        assert montecarlo.run_trials(cfg) == base
        monkeypatch.setenv("HERALDSIM_THREADS", "not-a-number")
        with pytest.raises(ValueError):
            montecarlo.run_trials(cfg)

    def test_seed_changes_results(self):
        cfg = boosted_config(trials=100_000)
        assert montecarlo.run_trials(cfg) != montecarlo.run_trials(replace(cfg, seed=5))

    def test_count_hierarchy(self):
        rec = montecarlo.run_trials(boosted_config(trials=150_000))
        assert rec.n12_given_h <= min(rec.n1_given_h, rec.n2_given_h)
        assert max(rec.n1_given_h, rec.n2_given_h) <= rec.n_heralds <= rec.trials

    def test_matches_expected_counts_within_three_sigma(self):
        cfg = boosted_config(trials=400_000)
        rec = montecarlo.run_trials(cfg)
        exp = montecarlo.expected_counts(cfg)
        for field in ("n_heralds", "n1_given_h", "n2_given_h", "n_signal_singles"):
            pull = _pull(getattr(rec, field), getattr(exp, field))
            assert abs(pull) < 3.0, field

    def test_gsi_matches_model_on_boosted_config(self):
        # lam = 0.02, eta_trans/eta_echo = 3, detection 0.5, dark = 0
        cfg = boosted_config(
            source=SourceParams(2e-3, 10.0),
            memory_a=MemoryParams(0.25, 0.75),
            memory_b=MemoryParams(0.25, 0.75),
            blocked_arm="B",
            trials=2_000_000,
            seed=33,
        )
        rec = montecarlo.run_trials(cfg)
        coinc = rec.n1_given_h + rec.n2_given_h
        g = estimators.gsi_from_counts(
            coinc, rec.n_idler_singles, rec.n_signal_singles, rec.trials
        )
        model = optics.gsi_model(0.02, 3.0)
        assert abs(g.value - model) < 3.0 * g.sigma

    def test_blocked_arm_kills_response(self):
        cfg = boosted_config(trials=200_000, blocked_arm="A", memory_b=MemoryParams(0.0, 0.0))
        # with arm A blocked and arm B dead, heralds arrive but no signal
        rec = montecarlo.run_trials(cfg)
        assert rec.n_heralds > 0
        assert rec.n1_given_h == 0
        assert rec.n_signal_singles == 0


class TestExpectedCounts:
    def test_zero_pump_dark_free(self):
        cfg = boosted_config(source=SourceParams(3e-3, 0.0), trials=1000)
        exp = montecarlo.expected_counts(cfg)
        assert exp.n_heralds == 0.0
        assert exp.n12_given_h == 0.0
        assert exp.n_signal_singles == 0.0

    def test_phase_ignored_in_randomized_mode(self):
        a = montecarlo.expected_counts(boosted_config(phase=0.0))
        b = montecarlo.expected_counts(boosted_config(phase=2.0))
        assert a == b

    def test_fixed_phase_average_equals_randomized(self):
        cfg = boosted_config(visibility=0.93)
        randomized = montecarlo.expected_counts(cfg)
        phases = np.linspace(0.0, 2 * math.pi, 16, endpoint=False)
        fixed = [
            montecarlo.expected_counts(replace(cfg, phase_mode="fixed", phase=p))
            for p in phases
        ]
        for field in ("n1_given_h", "n2_given_h", "n_signal_singles"):
            avg = np.mean([getattr(r, field) for r in fixed])
            assert avg == pytest.approx(getattr(randomized, field), rel=1e-10)

    def test_fixed_phase_rates_vary(self):
        cfg = boosted_config(phase_mode="fixed", visibility=0.9)
        bright = montecarlo.expected_counts(replace(cfg, phase=0.0))
        dark = montecarlo.expected_counts(replace(cfg, phase=math.pi))
        assert bright.n1_given_h < dark.n1_given_h
        assert bright.n2_given_h > dark.n2_given_h

    def test_truncation_guard(self):
        cfg = boosted_config(source=SourceParams(5e-2, 10.0), n_max=4)
        with pytest.raises(ValueError):
            montecarlo.expected_counts(cfg)

    def test_p11bar_matches_recombination_closed_form(self):
        cfg = boosted_config(trials=10**6)
        exp = montecarlo.expected_counts(cfg)
        q = montecarlo.conditional_two_photon(cfg)
        closed = optics.recombined_p11(q, cfg.bs, cfg.det1, cfg.det2)
        p11bar = exp.n12_given_h / exp.n_heralds
        # the residual is the classically-routed three-photon component
        assert p11bar == pytest.approx(closed, rel=0.08)
        assert p11bar > closed

    def test_p11bar_closed_form_converges_at_low_rates(self):
        cfg = boosted_config(
            source=SourceParams(1e-3, 10.0),
            heralding_efficiency=0.2,
            trials=10**6,
        )
        exp = montecarlo.expected_counts(cfg)
        q = montecarlo.conditional_two_photon(cfg)
        closed = optics.recombined_p11(q, cfg.bs, cfg.det1, cfg.det2)
        assert exp.n12_given_h / exp.n_heralds == pytest.approx(closed, rel=0.005)

    def test_click_gsi_converges_to_model_at_low_rates(self):
        cfg = boosted_config(
            source=SourceParams(2e-3, 10.0),
            memory_a=MemoryParams(0.25, 0.75),
            memory_b=MemoryParams(0.25, 0.75),
            heralding_efficiency=0.05,
            idler_det=DetectorParams(0.05),
            blocked_arm="B",
            trials=10**6,
        )
        exp = montecarlo.expected_counts(cfg)
        coinc = exp.n1_given_h + exp.n2_given_h
        g = coinc * exp.trials / (exp.n_idler_singles * exp.n_signal_singles)
        assert g == pytest.approx(optics.gsi_model(0.02, 3.0), rel=0.005)

    def test_thermal_g2_through_single_arm(self):
        # source characterization: no storage, no heralding, one arm only
        cfg = boosted_config(
            memory_a=MemoryParams(0.0, 1.0),
            memory_b=MemoryParams(0.0, 1.0),
            heralding_efficiency=0.2,
            idler_det=DetectorParams(0.0, 1.0),  # every window "heralds"
            blocked_arm="B",
            trials=10**6,
        )
        exp = montecarlo.expected_counts(cfg)
        g2 = (exp.n12_given_h / exp.trials) / (
            (exp.n1_given_h / exp.trials) * (exp.n2_given_h / exp.trials)
        )
        assert g2 == pytest.approx(2.0, abs=0.01)


class TestThermalG2Sampled:
    def test_sampled_g2_within_three_sigma_of_two(self):
        cfg = boosted_config(
            memory_a=MemoryParams(0.0, 1.0),
            memory_b=MemoryParams(0.0, 1.0),
            idler_det=DetectorParams(0.0, 1.0),
            blocked_arm="B",
            trials=3_000_000,
            seed=8,
        )
        rec = montecarlo.run_trials(cfg)
        g2 = estimators.gsi_from_counts(
            rec.n12_given_h, rec.n1_given_h, rec.n2_given_h, rec.trials
        )
        assert abs(g2.value - 2.0) < 3.0 * g2.sigma


class TestSubstream:
    def test_streams_independent_and_reproducible(self):
        a1 = montecarlo.substream(7, 0).random(5)
        a2 = montecarlo.substream(7, 0).random(5)
        b = montecarlo.substream(7, 1).random(5)
        np.testing.assert_array_equal(a1, a2)
        assert not np.array_equal(a1, b)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            montecarlo.substream(7, -1)


class TestValidation:
    def test_trial_config_rejects_bad_fields(self):
        good = boosted_config()
        with pytest.raises(ValueError):
            replace(good, phase_mode="sideways")
        with pytest.raises(ValueError):
            replace(good, visibility=1.2)
        with pytest.raises(ValueError):
            replace(good, trials=0)
        with pytest.raises(ValueError):
            replace(good, blocked_arm="C")
        with pytest.raises(ValueError):
            replace(good, heralding_efficiency=1.4)

    def test_count_record_hierarchy_enforced(self):
        with pytest.raises(ValueError):
            CountRecord(10, 20, 5, 2, 25, 10, 100, 1e-6)
        with pytest.raises(ValueError):
            CountRecord(10, 5, 5, 7, 10, 10, 100, 1e-6)
        with pytest.raises(ValueError):
            CountRecord(200, 5, 5, 2, 10, 200, 100, 1e-6)
