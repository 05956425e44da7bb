"""Copula families: densities, derivatives, samplers and tau conversions."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from copula_lab.copulas import (
    CopulaSpec,
    archimedean_param_to_tau,
    archimedean_tau_to_param,
    classify_stationary_points,
    copula_log_density,
    copula_log_density_grad,
    copula_log_density_hessian,
    rho_to_tau,
    sample_copula,
    tau_to_rho,
)
from copula_lab.errors import DomainError, ParameterError
from copula_lab.kendall import kendall_tau_empirical

T4 = CopulaSpec.student_t(0.0, 4.0)

FAMILIES = [
    CopulaSpec.gaussian(0.5),
    CopulaSpec.gaussian(-0.8),
    CopulaSpec.student_t(0.0, 4.0),
    CopulaSpec.student_t(0.5, 4.0),
    CopulaSpec.student_t(-0.3, 7.5),
    CopulaSpec.clayton(1.0),
    CopulaSpec.gumbel(1.5),
    CopulaSpec.frank(5.0),
    CopulaSpec.frank(-5.0),
]


def _id(spec):
    return f"{spec.family}-{spec.to_dict().get('rho', spec.theta)}-{spec.df}"


def _t_copula_oracle(u, rho, nu):
    """Ratio of the bivariate t density to its marginals, via scipy.stats."""
    x = stats.t.ppf(u, nu)
    joint = stats.multivariate_t(loc=[0, 0], shape=[[1, rho], [rho, 1]], df=nu).logpdf(x)
    return joint - stats.t.logpdf(x, nu).sum(axis=-1)


class TestDensity:
    def test_gaussian_zero_rho_is_zero(self):
        assert copula_log_density(CopulaSpec.gaussian(0.0), [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)

    def test_independence_is_zero_everywhere(self, rng):
        u = rng.random((50, 3))
        assert np.all(CopulaSpec.independence(3).log_density(u) == 0)

    @pytest.mark.parametrize("u, value, rel", [
        ((0.5, 0.99), 0.533, 0.005),
        ((0.85, 0.9), 1.047, 0.005),
    ])
    def test_reference_t_values(self, u, value, rel):
        assert np.exp(copula_log_density(T4, u)) == pytest.approx(value, rel=rel)

    def test_reference_t_value_in_extreme_tail(self):
        # 1 - 6.22e-16 is not representable; pass the upper tail explicitly
        c = np.exp(copula_log_density(T4, [2.87e-7, 1.0 - 6.22e-16], upper=[1 - 2.87e-7, 6.22e-16]))
        assert c == pytest.approx(5054.68, rel=0.01)

    @pytest.mark.parametrize("rho, nu", [(0.0, 4.0), (0.6, 4.0), (-0.4, 3.0), (0.2, 10.0)])
    def test_t_density_matches_scipy(self, rng, rho, nu):
        u = rng.uniform(0.001, 0.999, size=(200, 2))
        got = CopulaSpec.student_t(rho, nu).log_density(u)
        np.testing.assert_allclose(got, _t_copula_oracle(u, rho, nu), rtol=1e-9, atol=1e-9)

    def test_gaussian_density_matches_scipy(self, rng):
        corr = np.array([[1, 0.3, -0.2], [0.3, 1, 0.4], [-0.2, 0.4, 1]])
        u = rng.uniform(0.01, 0.99, size=(100, 3))
        x = stats.norm.ppf(u)
        oracle = stats.multivariate_normal(cov=corr).logpdf(x) - stats.norm.logpdf(x).sum(-1)
        np.testing.assert_allclose(CopulaSpec.gaussian(corr).log_density(u), oracle, rtol=1e-10, atol=1e-10)

    def test_clayton_matches_closed_form(self, rng):
        th = 2.0
        u = rng.uniform(0.05, 0.95, size=(50, 2))
        a, b = u.T
        dens = (1 + th) * (a * b) ** (-th - 1) * (a ** -th + b ** -th - 1) ** (-2 - 1 / th)
        np.testing.assert_allclose(np.exp(CopulaSpec.clayton(th).log_density(u)), dens, rtol=1e-10)

    @pytest.mark.parametrize("spec", [CopulaSpec.gaussian(0.5), CopulaSpec.gaussian(-0.8), T4,
                                      CopulaSpec.student_t(0.5, 4.0), CopulaSpec.clayton(1.0),
                                      CopulaSpec.gumbel(1.5), CopulaSpec.frank(5.0), CopulaSpec.frank(-5.0)],
                             ids=_id)
    def test_integrates_to_one(self, spec):
        m = (np.arange(400) + 0.5) / 400
        grid = np.stack(np.meshgrid(m, m, indexing="ij"), -1).reshape(-1, 2)
        assert np.exp(spec.log_density(grid)).mean() == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("u", [(0.0, 0.5), (1.0, 0.5), (0.5, -0.1), (0.5, np.nan)])
    def test_boundary_is_domain_error(self, u):
        with pytest.raises(DomainError):
            copula_log_density(T4, u)

    def test_wrong_dimension(self):
        with pytest.raises(DomainError):
            copula_log_density(T4, [0.2, 0.3, 0.4])

    @pytest.mark.parametrize("corr", [[[1, 1.2], [1.2, 1]], [[1, 0.5], [0.4, 1]], [[2, 0], [0, 1]]])
    def test_invalid_correlation(self, corr):
        with pytest.raises(ParameterError):
            CopulaSpec.gaussian(corr)

    def test_singular_correlation(self):
        with pytest.raises(ParameterError):
            CopulaSpec.gaussian([[1, 1, 0], [1, 1, 0], [0, 0, 1]])

    @pytest.mark.parametrize("build", [lambda: CopulaSpec.clayton(-1), lambda: CopulaSpec.gumbel(0.5),
                                       lambda: CopulaSpec.student_t(0.1, 0.0), lambda: CopulaSpec("nope")])
    def test_invalid_parameters(self, build):
        with pytest.raises(ParameterError):
            build()

    @given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
    @settings(max_examples=200, deadline=None)
    def test_density_positive_and_finite(self, a, b):
        for spec in FAMILIES:
            assert np.isfinite(copula_log_density(spec, [a, b]))

    def test_roundtrip_serialization(self):
        for spec in FAMILIES:
            assert CopulaSpec.from_dict(spec.to_dict()) == spec


class TestDerivatives:
    def test_independence_zero(self, rng):
        u = rng.random((5, 2))
        assert np.all(copula_log_density_grad(CopulaSpec.independence(), u) == 0)
        assert np.all(copula_log_density_hessian(CopulaSpec.independence(), u) == 0)

    @pytest.mark.parametrize("spec", FAMILIES, ids=_id)
    def test_gradient_matches_finite_differences(self, spec, rng):
        u = rng.uniform(0.02, 0.98, size=(100, 2))
        g = spec.grad_log_density(u)
        h = 1e-6
        fd = np.empty_like(u)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd[:, j] = (spec.log_density(u + e) - spec.log_density(u - e)) / (2 * h)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5 * np.abs(fd).max())

    @pytest.mark.parametrize("spec", FAMILIES[:5], ids=_id)
    def test_analytic_hessian_matches_gradient_differences(self, spec, rng):
        u = rng.uniform(0.05, 0.95, size=(40, 2))
        hs = spec.hess_log_density(u)
        h = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (spec.grad_log_density(u + e) - spec.grad_log_density(u - e)) / (2 * h)
            np.testing.assert_allclose(hs[:, :, j], fd, rtol=1e-5, atol=1e-5)

    def test_t_centre_is_local_max(self):
        g = copula_log_density_grad(T4, [0.5, 0.5])
        h = copula_log_density_hessian(T4, [0.5, 0.5])
        assert np.max(np.abs(g)) < 1e-12
        assert np.all(np.linalg.eigvalsh(h) < 0)

    def test_t_saddle_is_indefinite(self):
        ev = np.linalg.eigvalsh(copula_log_density_hessian(T4, [0.813, 0.813]))
        assert ev[0] < 0 < ev[1]


@pytest.fixture(scope="module")
def points():
    return classify_stationary_points(CopulaSpec.independence(), T4)


class TestStationaryPoints:
    def test_centre_maximum(self, points):
        p = points.nearest([0.5, 0.5])
        assert p.kind == "max"
        assert np.max(np.abs(np.subtract(p.u, 0.5))) < 1e-3

    def test_saddle(self, points):
        p = points.nearest([0.813, 0.813])
        assert p.kind == "saddle"
        assert np.max(np.abs(np.subtract(p.u, 0.813))) < 1e-3

    def test_four_symmetric_saddles(self, points):
        saddles = sorted(tuple(np.round(p.u, 6)) for p in points if p.kind == "saddle")
        assert len(saddles) == 4
        assert not points.degenerate

    def test_swap_exchanges_max_and_min(self, points):
        swapped = classify_stationary_points(T4, CopulaSpec.independence())
        flip = {"max": "min", "min": "max", "saddle": "saddle"}
        assert len(swapped) == len(points)
        for p in points:
            assert swapped.nearest(p.u).kind == flip[p.kind]

    def test_identical_copulas_degenerate(self):
        out = classify_stationary_points(T4, CopulaSpec.student_t(0.0, 4.0))
        assert out.degenerate and len(out) == 0

    def test_higher_dimension_rejected(self):
        with pytest.raises(DomainError):
            classify_stationary_points(CopulaSpec.independence(3), CopulaSpec.gaussian(np.eye(3)))


class TestSampling:
    def test_independence_marginals_uniform(self, rng):
        x = sample_copula(CopulaSpec.independence(), 10_000, rng)
        for j in range(2):
            assert stats.kstest(x[:, j], "uniform").pvalue > 0.01

    @pytest.mark.parametrize("spec, tau", [
        (CopulaSpec.gaussian(-0.8), 2 * np.arcsin(-0.8) / np.pi),
        (CopulaSpec.clayton(3.0), 0.6),
        (CopulaSpec.gumbel(2.0), 0.5),
        (CopulaSpec.frank(5.0), archimedean_param_to_tau("frank", 5.0)),
        (CopulaSpec.student_t(0.5, 4.0), 1 / 3),
    ], ids=["gaussian", "clayton", "gumbel", "frank", "t"])
    def test_empirical_tau(self, spec, tau, rng):
        x = sample_copula(spec, 10_000, rng)
        # tau-hat has sd below 2/(3 sqrt(n)) ~ 0.0067; 3 SE is about 0.02
        assert kendall_tau_empirical(x) == pytest.approx(tau, abs=0.02)
        for j in range(2):
            assert stats.kstest(x[:, j], "uniform").pvalue > 0.001

    def test_seeded(self):
        a = sample_copula(T4, 100, np.random.default_rng(5))
        b = sample_copula(T4, 100, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_clayton_higher_dimension(self, rng):
        x = sample_copula(CopulaSpec.clayton(2.0, dim=3), 5000, rng)
        assert x.shape == (5000, 3)
        assert np.all((x > 0) & (x < 1))

    def test_frechet_hoeffding_bounds(self, rng):
        # C(a, b) estimated from samples stays within max(a+b-1, 0) and min(a, b)
        x = sample_copula(CopulaSpec.gaussian(0.95), 20_000, rng)
        for a, b in [(0.2, 0.3), (0.5, 0.5), (0.9, 0.7)]:
            c = np.mean((x[:, 0] <= a) & (x[:, 1] <= b))
            assert max(a + b - 1, 0) - 0.01 <= c <= min(a, b) + 0.01


class TestTauConversions:
    def test_reference_rho(self):
        assert round(rho_to_tau(-0.9), 3) == -0.713

    def test_half(self):
        assert rho_to_tau(0.5) == pytest.approx(1 / 3, abs=1e-15)

    @pytest.mark.parametrize("rho", np.round(np.arange(-0.95, 0.951, 0.05), 2))
    def test_roundtrip(self, rho):
        assert abs(tau_to_rho(rho_to_tau(rho)) - rho) < 1e-12

    @pytest.mark.parametrize("bad", [1.0, -1.0, 1.5, np.nan])
    def test_out_of_range(self, bad):
        with pytest.raises(DomainError):
            rho_to_tau(bad)
        with pytest.raises(DomainError):
            tau_to_rho(bad)

    @pytest.mark.parametrize("family, param, tau", [("clayton", 3.0, 0.6), ("gumbel", 2.0, 0.5),
                                                    ("gumbel", 1.0, 0.0), ("clayton", 0.0, 0.0)])
    def test_archimedean_closed_forms(self, family, param, tau):
        assert archimedean_param_to_tau(family, param) == pytest.approx(tau, abs=1e-15)

    @pytest.mark.parametrize("theta", [-8.0, -1.0, 0.5, 5.0, 20.0])
    def test_frank_tau_matches_quadrature_oracle(self, theta):
        # tau = 4 E[C(U, V)] - 1 with C evaluated by a fine midpoint rule
        m = (np.arange(1000) + 0.5) / 1000
        a, b = np.meshgrid(m, m, indexing="ij")
        c = -np.log1p(np.expm1(-theta * a) * np.expm1(-theta * b) / np.expm1(-theta)) / theta
        dens = np.exp(CopulaSpec.frank(theta).log_density(np.stack([a, b], -1)))
        oracle = 4 * np.mean(c * dens) - 1
        assert archimedean_param_to_tau("frank", theta) == pytest.approx(oracle, abs=1e-4)

    @pytest.mark.parametrize("family, tau", [("clayton", 0.4), ("gumbel", 0.7), ("frank", 0.3), ("frank", -0.6)])
    def test_archimedean_roundtrip(self, family, tau):
        p = archimedean_tau_to_param(family, tau)
        assert archimedean_param_to_tau(family, p) == pytest.approx(tau, abs=1e-10)

    def test_spec_kendall_tau(self):
        assert CopulaSpec.gaussian(0.5).kendall_tau() == pytest.approx(1 / 3)
        assert CopulaSpec.clayton(2.0).kendall_tau() == pytest.approx(0.5)
        assert CopulaSpec.independence().kendall_tau() == 0.0

    def test_archimedean_domain(self):
        with pytest.raises(DomainError):
            archimedean_param_to_tau("gumbel", 0.5)
        with pytest.raises(DomainError):
            archimedean_param_to_tau("gaussian", 0.5)
