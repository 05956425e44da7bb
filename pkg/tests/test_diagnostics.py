import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copula_lab.copulas import rho_to_tau
from copula_lab.diagnostics import SupportProbe, chronic_rejection_check, induced_tau
from copula_lab.errors import DomainError
from copula_lab.experiments.config import gamma_design_prior, tau_design_prior
from copula_lab.models import GammaShapeRate, MultinomialConditional, NormalMeanVar, inverse_fisher
from copula_lab.vines import DVine


def _random_spd(rng, d):
    a = rng.normal(size=(d, d))
    return a @ a.T + d * np.eye(d) * 0.1


class TestInducedTau:
    def test_diagonal(self):
        out = induced_tau(np.diag([1.0, 4.0, 9.0]), 3)
        assert out.taus == (0.0, 0.0, 0.0)

    def test_equicorrelated_partial(self):
        s = np.full((3, 3), 0.5) + 0.5 * np.eye(3)
        out = induced_tau(s, 3).as_dict()
        # partial correlation of an equicorrelated triple: (r - r^2) / (1 - r^2) = 1/3
        assert out["1,3|2"] == pytest.approx(2 * np.arcsin(1 / 3) / np.pi, abs=1e-14)
        assert out["1,2|∅"] == pytest.approx(1 / 3, abs=1e-14)

    def test_gamma_chain(self):
        out = induced_tau(inverse_fisher(GammaShapeRate(), [2.0, 1.0]), 2)
        assert out.taus[0] == pytest.approx(2 * np.arcsin(0.8805) / np.pi, abs=1e-4)

    def test_matches_regression_oracle(self, rng):
        """Partial correlation from regressing on the conditioning set."""
        s = _random_spd(rng, 4)
        out = induced_tau(s, 4).as_dict()
        i, j, cond = 0, 3, [1, 2]
        resid = s[np.ix_([i, j], [i, j])] - s[np.ix_([i, j], cond)] @ np.linalg.solve(
            s[np.ix_(cond, cond)], s[np.ix_(cond, [i, j])])
        rho = resid[0, 1] / np.sqrt(resid[0, 0] * resid[1, 1])
        assert out["1,4|2,3"] == pytest.approx(rho_to_tau(rho), abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, seed, s):
        rng = np.random.default_rng(seed)
        sig = _random_spd(rng, 3)
        d = np.diag(rng.uniform(0.1, 10, 3))
        base = np.array(induced_tau(sig, 3).taus)
        np.testing.assert_allclose(induced_tau(s * sig, 3).taus, base, atol=1e-12)
        np.testing.assert_allclose(induced_tau(d @ sig @ d, 3).taus, base, atol=1e-12)
        assert np.all(np.abs(base) < 1)

    @pytest.mark.parametrize("bad", [np.array([[1.0, 2.0], [2.0, 1.0]]), np.array([[1.0, 0.2], [0.1, 1.0]])])
    def test_invalid(self, bad):
        with pytest.raises(DomainError):
            induced_tau(bad, 2)


class TestChronicRejection:
    def test_multinomial_rejected(self):
        prior = tau_design_prior()
        vine = DVine(2, (rho_to_tau(-0.9),))
        for probe in (SupportProbe.sample(prior, 256, seed=3), SupportProbe.grid(prior, 15),
                      [[0.5, 0.5], [0.1, 0.9]]):
            v = chronic_rejection_check(vine, MultinomialConditional(3), probe)
            assert v.chronically_rejected
            assert v.gap == pytest.approx(0.713, abs=1e-3)

    def test_normal_rejected(self):
        v = chronic_rejection_check(DVine(2, (0.3,)), NormalMeanVar(), [[0.0, 1.0], [2.0, 5.0]])
        assert v.chronically_rejected

    def test_gamma_not_rejected_when_matching(self):
        prior = gamma_design_prior()
        probe = SupportProbe.sample(prior, 64, seed=1)
        theta = probe.points_array()[7]
        tau = induced_tau(inverse_fisher(GammaShapeRate(), theta), 2).taus[0]
        v = chronic_rejection_check(DVine(2, (tau,)), GammaShapeRate(), probe)
        assert not v.chronically_rejected
        assert v.gap < 1e-12

    def test_diagonal_model_zero_taus_not_rejected(self):
        v = chronic_rejection_check(DVine(3, (0.0, 0.0, 0.0)), MultinomialConditional(4),
                                    [[0.2, 0.3, 0.4]])
        assert not v.chronically_rejected

    def test_tolerance_monotone(self):
        vine = DVine(2, (0.5,))
        probe = [[1.0, 1.0], [5.0, 2.0]]
        verdicts = [chronic_rejection_check(vine, GammaShapeRate(), probe, tol).chronically_rejected
                    for tol in (0.01, 0.05, 0.1, 0.3, 0.6)]
        # once accepted, larger tolerances stay accepted
        assert verdicts == sorted(verdicts, reverse=True)

    def test_skips_boundary_probes(self):
        v = chronic_rejection_check(DVine(2, (0.0,)), MultinomialConditional(3), [[1.0, 0.5], [0.2, 0.3]])
        assert v.skipped == 1 and v.probes == 2

    def test_empty_probe(self):
        with pytest.raises(ValueError):
            chronic_rejection_check(DVine(2, (0.1,)), MultinomialConditional(3), [])

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            chronic_rejection_check(DVine(2, (0.1,)), MultinomialConditional(3), [[0.2, 0.2]], tol_tau=0.0)

    def test_verdict_serializes(self):
        import json

        v = chronic_rejection_check(DVine(2, (0.1,)), MultinomialConditional(3), [[0.2, 0.2]])
        assert json.loads(json.dumps(v.to_dict()))["chronically_rejected"] is True
