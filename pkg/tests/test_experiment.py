import math

import numpy as np
import pytest

from heraldsim import estimators, experiment, montecarlo, presets
from heraldsim.estimators import Measured
from heraldsim.experiment import (
    REFERENCE_HERALDS,
    REFERENCE_PSUM,
    REFERENCE_STAGES,
    REFERENCE_TABLE,
    REFERENCE_THREEFOLD_COINCIDENCES,
    REFERENCE_VISIBILITY,
)


@pytest.fixture(scope="module")
def paper_sweep():
    cfg = presets.paper_experiment(use_reference_pc=True, trials=3 * 10**11)
    return experiment.pump_sweep(cfg)


class TestPumpSweep:
    def test_model_column_decreasing(self, paper_sweep):
        models = [row.gsi_model for row in paper_sweep]
        assert models == sorted(models, reverse=True)
        assert 29.0 < models[0] < 35.0  # 1 mW
        assert 6.0 < models[-1] < 7.2  # 16 mW

    def test_p11_xcorr_near_reference_at_8mw(self, paper_sweep):
        row = next(r for r in paper_sweep if r.power_mw == 8)
        assert abs(row.p11_xcorr.value - 5.18e-9) / 5.18e-9 < 0.25

    def test_xcorr_exceeds_theory_at_every_power(self, paper_sweep):
        for row in paper_sweep:
            assert row.p11_xcorr.value > row.p11_theory

    def test_concurrence_nonincreasing_with_power(self, paper_sweep):
        bounds = [row.c_bound.value for row in paper_sweep]
        assert bounds == sorted(bounds, reverse=True)
        assert all(b > 0 for b in bounds)

    def test_zero_power_row(self):
        cfg = presets.paper_experiment(pump_powers=(0.0,))
        (row,) = experiment.pump_sweep(cfg)
        assert row.c_bound.value == 0.0
        assert row.p10.value == 0.0
        assert math.isinf(row.gsi_model)

    def test_mc_mode_matches_analytic_within_three_sigma(self):
        desk = presets.desk_experiment(trials=400_000)
        mc_rows = experiment.pump_sweep(desk)
        an_rows = experiment.pump_sweep(presets.desk_experiment(trials=400_000, mode="analytic"))
        for mc, an in zip(mc_rows, an_rows):
            assert abs(mc.gsi_est.value - an.gsi_est.value) < 3 * mc.gsi_est.sigma
            assert abs(mc.p10.value - an.p10.value) < 3 * mc.p10.sigma


class TestModelVsMeasured:
    def test_model_within_25_percent_at_every_power(self, paper_sweep):
        for row in paper_sweep:
            measured = experiment.measured_gsi(experiment.reference_row(row.power_mw))
            assert abs(row.gsi_model / measured.value - 1.0) < 0.25

    def test_8mw_model_value(self, paper_sweep):
        row = next(r for r in paper_sweep if r.power_mw == 8)
        assert row.gsi_model == pytest.approx(10.64, abs=0.01)

    def test_model_band_brackets_center(self):
        lo, hi = experiment.gsi_model_band(8.0, p_c=1.0845e-4)
        assert lo < 10.64 < hi
        assert hi - lo < 2.0


class TestThreefoldCampaign:
    def test_reference_reproduction_mle(self):
        cfg = presets.paper_experiment()
        camp = experiment.threefold_campaign(
            cfg,
            n_observed=REFERENCE_THREEFOLD_COINCIDENCES,
            n_heralds=REFERENCE_HERALDS,
            p_sum=REFERENCE_PSUM,
        )
        assert camp.mle.p11.value == pytest.approx(2.9e-9, abs=1e-11)
        assert camp.c_mle.value == pytest.approx(6.39e-5, abs=6e-8)
        assert camp.c_mle.sigma == pytest.approx(3.8e-5, abs=4e-6)
        # within the quoted band
        assert abs(camp.c_mle.value - 6.3e-5) < 3.8e-5

    def test_reference_reproduction_ce(self):
        cfg = presets.paper_experiment()
        camp = experiment.threefold_campaign(
            cfg,
            n_observed=2,
            n_heralds=REFERENCE_HERALDS,
            p_sum=REFERENCE_PSUM,
        )
        assert camp.ce.p11.value == pytest.approx(4.349e-9, abs=1e-11)
        assert camp.c_ce.value == pytest.approx(3.97e-5, abs=5e-7)
        # inside the quoted band 3.9(3.8)e-5
        assert abs(camp.c_ce.value - 3.9e-5) < 3.8e-5
        assert camp.c_ce.value < camp.c_mle.value

    def test_zero_coincidences_structure(self):
        cfg = presets.paper_experiment()
        camp = experiment.threefold_campaign(
            cfg, n_observed=0, n_heralds=REFERENCE_HERALDS, p_sum=REFERENCE_PSUM
        )
        v, psum = REFERENCE_VISIBILITY.value, REFERENCE_PSUM.value
        assert camp.c_mle.value == pytest.approx(v * psum, rel=1e-9)
        assert camp.c_ce.value < camp.c_mle.value

    def test_both_corrections_reported(self):
        cfg = presets.paper_experiment()
        camp = experiment.threefold_campaign(
            cfg, n_observed=2, n_heralds=REFERENCE_HERALDS, p_sum=REFERENCE_PSUM
        )
        assert camp.correction_used == 2.27
        assert camp.correction_exact == pytest.approx(2.2317, abs=1e-3)

    def test_agreement_with_sweep_at_16mw_reference_anchored(self):
        """Fig-2c style cross-check: the 16 mW cross-correlation bound and the
        threefold bound agree within the combined one-sigma uncertainty."""
        row16 = experiment.reference_row(16)
        psum = Measured(
            row16.p10.value + row16.p01.value,
            math.hypot(row16.p10.sigma, row16.p01.sigma),
        )
        table = experiment.table_from_probabilities(row16.p10, row16.p01, row16.p11)
        c_x = estimators.concurrence_bound(REFERENCE_VISIBILITY, table)
        camp = experiment.threefold_campaign(
            presets.paper_experiment(),
            n_observed=2,
            n_heralds=REFERENCE_HERALDS,
            p_sum=REFERENCE_PSUM,
        )
        diff = abs(c_x.value - camp.c_mle.value)
        assert diff < math.hypot(c_x.sigma, camp.c_mle.sigma)

    def test_expected_counts_threefold_preset(self):
        cfg = presets.threefold_experiment()
        # herald count matching the long campaign
        rec = montecarlo.expected_counts(
            experiment.trial_config(cfg, 16, trials=10**6)
        )
        p_h = rec.n_heralds / rec.trials
        trials = round(REFERENCE_HERALDS / p_h)
        rec = montecarlo.expected_counts(experiment.trial_config(cfg, 16, trials=trials))
        psum = (rec.n1_given_h + rec.n2_given_h) / rec.n_heralds
        assert psum == pytest.approx(REFERENCE_PSUM.value, rel=1e-3)
        assert rec.n_heralds == pytest.approx(REFERENCE_HERALDS, rel=1e-6)
        # a handful of expected threefold coincidences, same order as observed
        assert 1.0 <= rec.n12_given_h <= 6.0

    def test_sampled_counts_deterministic(self):
        cfg = presets.paper_experiment(pump_powers=(16,), trials=10**9)
        a = experiment.threefold_campaign(cfg, sample_counts=True)
        b = experiment.threefold_campaign(cfg, sample_counts=True)
        assert a.mle.n == b.mle.n


class TestTransmissionBudget:
    def test_eta_total_is_stage_product(self):
        budget = experiment.transmission_budget(REFERENCE_STAGES, 0.965, 10.0)
        assert budget.eta_total == pytest.approx(2.16e-4, rel=1e-12)

    def test_detected_and_after_crystal_bounds(self):
        budget = experiment.transmission_budget(REFERENCE_STAGES, 0.965, 10.0)
        assert budget.c_detected == pytest.approx(6.444e-5, rel=1e-3)
        assert budget.c_after_crystals == pytest.approx(8.95e-3, rel=1e-3)

    def test_all_unity_stages(self):
        stages = {"interferometer": 1.0, "detector": 1.0}
        budget = experiment.transmission_budget(stages, 0.9, 17.0)
        expected = 0.9 - 2.0 / 4.0
        assert budget.c_detected == pytest.approx(expected)
        assert budget.c_after_crystals == pytest.approx(expected)

    def test_zero_stage_rejected(self):
        with pytest.raises(ValueError):
            experiment.transmission_budget({"interferometer": 0.0, "detector": 0.3}, 0.9, 10.0)


class TestFringeScan:
    PHASES = np.linspace(0.0, 2 * math.pi, 12, endpoint=False)

    def test_analytic_round_trip_recovers_visibility(self):
        # noiseless: no sampling and no dark background
        from heraldsim.optics import DetectorParams

        cfg = presets.paper_experiment(
            trials=10**9, det1=DetectorParams(0.2, 0.0), det2=DetectorParams(0.4, 0.0)
        )
        scan = experiment.fringe_scan(cfg, self.PHASES, power_mw=16)
        for fit in scan.fits:
            # residual 3e-4 dilution is the phase-insensitive multi-photon part
            assert fit.visibility.value == pytest.approx(0.965, abs=5e-4)

    def test_dark_background_dilutes_raw_visibility(self):
        # raw-count fringes carry the per-window dark background
        cfg = presets.paper_experiment(trials=10**9)
        scan = experiment.fringe_scan(cfg, self.PHASES, power_mw=16)
        for fit in scan.fits:
            assert 0.945 < fit.visibility.value < 0.965

    def test_detector_amplitudes_differ(self):
        cfg = presets.paper_experiment(trials=10**9)
        scan = experiment.fringe_scan(cfg, self.PHASES, power_mw=16)
        amp1, amp2 = scan.fits[0].amplitude, scan.fits[1].amplitude
        assert amp2 > 1.5 * amp1  # detector 2 sees roughly twice the signal

    def test_mc_fits_agree_within_uncertainty(self):
        cfg = presets.paper_experiment(mode="mc", seed=3)
        scan = experiment.fringe_scan(cfg, self.PHASES, power_mw=16, trials_per_point=3 * 10**6)
        v1, v2 = scan.fits[0].visibility, scan.fits[1].visibility
        assert abs(v1.value - v2.value) < 3 * math.hypot(v1.sigma, v2.sigma)
        for fit in scan.fits:
            assert abs(fit.visibility.value - 0.965) < 4 * fit.visibility.sigma

    def test_visibility_flat_across_powers(self):
        cfg = presets.paper_experiment(trials=10**9)
        fitted = []
        for power in (1, 4, 16):
            scan = experiment.fringe_scan(cfg, self.PHASES, power_mw=power)
            fitted.append(scan.fits[0].visibility.value)
        assert max(fitted) - min(fitted) < 2e-3

    def test_degenerate_phases_rejected(self):
        cfg = presets.paper_experiment()
        with pytest.raises(ValueError):
            experiment.fringe_scan(cfg, [0.0, 1.0, 2.0])


class TestReferenceData:
    def test_table_has_seven_rows(self):
        assert len(REFERENCE_TABLE) == 7
        assert [r.power_mw for r in REFERENCE_TABLE] == [1, 2, 3, 4, 8, 13, 16]

    def test_measured_gsi_inversion_consistency(self):
        # re-substituting the inverted correlation reproduces each p11 exactly
        for row in REFERENCE_TABLE:
            g = experiment.measured_gsi(row)
            back = estimators.p11_xcorr(row.p10, row.p01, g)
            assert back.value == pytest.approx(row.p11.value, rel=1e-12)

    def test_unknown_power_rejected(self):
        with pytest.raises(KeyError):
            experiment.reference_row(5)


class TestConcurrenceTrendWithPumpModel:
    def test_monotone_degradation_with_lambda(self):
        """Closed-form chain: model correlation at dark = 0 into the
        concurrence bound decreases monotonically with the pair parameter."""
        from heraldsim import optics

        psum = 2.16e-4
        bounds = []
        for lam in np.linspace(0.002, 0.05, 12):
            g = optics.gsi_model(lam, 2.936)
            half = Measured(psum / 2)
            p11 = estimators.p11_xcorr(half, half, Measured(g))
            table = experiment.table_from_probabilities(half, half, p11)
            bounds.append(estimators.concurrence_bound(Measured(0.965), table).value)
        assert all(a > b for a, b in zip(bounds, bounds[1:]))
