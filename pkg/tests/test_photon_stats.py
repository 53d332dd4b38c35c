import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim import photon_stats as ps


def test_lambda_from_pump_zero():
    assert ps.lambda_from_pump(2.71e-3, 0.0) == 0.0


def test_lambda_from_pump_reference_product():
    assert ps.lambda_from_pump(2.71e-3, 8.0) == pytest.approx(0.02168, rel=1e-12)


def test_lambda_from_pump_rejects_unphysical():
    with pytest.raises(ValueError):
        ps.lambda_from_pump(2.71e-3, 400.0)
    with pytest.raises(ValueError):
        ps.lambda_from_pump(-1.0, 1.0)


def test_source_params_lam():
    src = ps.SourceParams(2.71e-3, 8.0)
    assert src.lam == pytest.approx(0.02168)
    with pytest.raises(ValueError):
        ps.SourceParams(2.71e-3, 400.0)


class TestTmssJoint:
    def test_vacuum(self):
        joint = ps.tmss_joint(0.0, 4)
        assert joint.probs[0, 0] == 1.0
        assert joint.probs.sum() == 1.0

    def test_geometric_closed_form(self):
        joint = ps.tmss_joint(0.01, 5)
        assert joint.probs[1, 1] == pytest.approx(0.0099, rel=1e-12)
        assert joint.probs[2, 2] == pytest.approx(9.9e-5, rel=1e-12)

    def test_geometric_tail_mass(self):
        joint = ps.tmss_joint(0.5, 10, trunc_tol=1e-3)
        assert joint.probs.sum() == pytest.approx(1.0 - 0.5**11, rel=1e-12)

    def test_off_diagonal_exactly_zero(self):
        joint = ps.tmss_joint(0.03, 8)
        off = joint.probs[~np.eye(9, dtype=bool)]
        assert np.all(off == 0.0)

    def test_mass_check_rejects_undertruncation(self):
        with pytest.raises(ValueError):
            ps.tmss_joint(0.5, 10)  # default tolerance is far tighter than 0.5^11

    def test_marginals_are_geometric(self):
        lam = 0.05
        joint = ps.tmss_joint(lam, 30)
        marg = joint.signal_marginal()
        assert marg.mean() == pytest.approx(lam / (1 - lam), rel=1e-10)
        np.testing.assert_allclose(marg.probs, joint.idler_marginal().probs)


class TestThin:
    def test_identity(self):
        d = ps.geometric_distribution(0.1, 12)
        np.testing.assert_allclose(ps.thin(d, 1.0).probs, d.probs, atol=1e-15)

    def test_total_loss_gives_vacuum(self):
        d = ps.geometric_distribution(0.1, 12)
        out = ps.thin(d, 0.0)
        assert out.probs[0] == pytest.approx(d.probs.sum(), abs=1e-15)
        assert np.all(out.probs[1:] == 0.0)

    def test_single_photon_bernoulli(self):
        single = ps.PhotonNumberDistribution([0.0, 1.0])
        out = ps.thin(single, 0.3)
        np.testing.assert_allclose(out.probs, [0.7, 0.3], atol=1e-15)

    def test_mass_preserved(self):
        d = ps.geometric_distribution(0.3, 40)
        assert ps.thin(d, 0.37).probs.sum() == pytest.approx(d.probs.sum(), abs=1e-13)

    def test_range_check(self):
        d = ps.geometric_distribution(0.1, 15)
        with pytest.raises(ValueError):
            ps.thin(d, 1.5)

    @settings(max_examples=40, deadline=None)
    @given(
        lam=st.floats(0.0, 0.3),
        a=st.floats(0.0, 1.0),
        b=st.floats(0.0, 1.0),
    )
    def test_composition_law(self, lam, a, b):
        d = ps.geometric_distribution(lam, 25, trunc_tol=1e-6)
        once = ps.thin(ps.thin(d, a), b)
        combined = ps.thin(d, a * b)
        np.testing.assert_allclose(once.probs, combined.probs, atol=1e-12)


class TestG2Zero:
    def test_thermal_is_two(self):
        d = ps.geometric_distribution(0.1, 60)
        assert ps.g2_zero(d) == pytest.approx(2.0, abs=1e-6)

    def test_poissonian_is_one(self):
        d = ps.poisson_distribution(0.5, 40)
        assert ps.g2_zero(d) == pytest.approx(1.0, abs=1e-6)

    def test_single_photon_is_zero(self):
        assert ps.g2_zero(ps.PhotonNumberDistribution([0.0, 1.0])) == 0.0

    def test_vacuum_rejected(self):
        with pytest.raises(ValueError):
            ps.g2_zero(ps.PhotonNumberDistribution([1.0, 0.0]))

    def test_thermal_limit_holds_for_small_lambdas(self):
        for lam in (0.01, 0.05, 0.1):
            d = ps.geometric_distribution(lam, 60)
            assert ps.g2_zero(d) == pytest.approx(2.0, abs=1e-6)


def _heralded_bruteforce(lam, n_max, eta_idler, dark_idler):
    """Independent enumeration oracle over the (n_i, n_s) grid."""
    weights = {}
    p_h = 0.0
    for n in range(n_max + 1):
        p_state = (1 - lam) * lam**n
        click = 1 - (1 - dark_idler) * (1 - eta_idler) ** n
        p_h += p_state * click
        weights[n] = weights.get(n, 0.0) + p_state * click
    dist = [weights.get(n, 0.0) / p_h for n in range(n_max + 1)]
    return dist, p_h


class TestHeraldedSignal:
    def test_perfect_heralding_removes_vacuum(self):
        joint = ps.tmss_joint(0.02168, 8)
        cond, p_h = ps.heralded_signal(joint, 1.0, 0.0)
        assert cond.probs[0] == 0.0
        assert p_h == pytest.approx(0.02168, abs=1e-10)

    def test_matches_bruteforce_enumeration(self):
        lam, n_max = 0.02168, 8
        joint = ps.tmss_joint(lam, n_max)
        cond, p_h = ps.heralded_signal(joint, 0.1, 0.0)
        expected, p_h_expected = _heralded_bruteforce(lam, n_max, 0.1, 0.0)
        np.testing.assert_allclose(cond.probs, expected, atol=1e-15)
        assert p_h == pytest.approx(p_h_expected, abs=1e-15)

    def test_heralded_g2_small_positive(self):
        joint = ps.tmss_joint(0.02168, 8)
        cond, _ = ps.heralded_signal(joint, 0.1, 0.0)
        g2 = ps.g2_zero(cond)
        assert 0.0 < g2 < 0.2  # strong antibunching, same regime as measured

    def test_no_heralds_rejected(self):
        joint = ps.tmss_joint(0.02, 8)
        with pytest.raises(ValueError):
            ps.heralded_signal(joint, 0.0, 0.0)

    def test_dark_counts_included(self):
        joint = ps.tmss_joint(0.02, 8)
        cond, p_h = ps.heralded_signal(joint, 0.0, 0.5)
        # pure dark heralds carry no information: conditional equals marginal
        np.testing.assert_allclose(cond.probs, joint.signal_marginal().probs, atol=1e-15)
        assert p_h == pytest.approx(0.5)

    def test_perfect_heralding_is_renormalized_diagonal(self):
        joint = ps.tmss_joint(0.04, 8)
        cond, _ = ps.heralded_signal(joint, 1.0, 0.0)
        diag = np.diag(joint.probs).copy()
        diag[0] = 0.0
        np.testing.assert_allclose(cond.probs, diag / diag.sum(), atol=1e-14)


def test_distribution_validation():
    with pytest.raises(ValueError):
        ps.PhotonNumberDistribution([0.5, 0.4])  # mass deficit
    with pytest.raises(ValueError):
        ps.PhotonNumberDistribution([1.2, -0.2])
    with pytest.raises(ValueError):
        ps.PhotonNumberDistribution([1.0])  # n_max must be >= 1
