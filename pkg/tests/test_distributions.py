import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from microreserve import (DegenerateWindowError, FrankCopula,
                          GeneralizedGammaDelay, SeverityModel,
                          TruncatedDelay, conditional_cross_moment, frank_tau,
                          frank_theta_from_tau, substream)
from microreserve import fixtures


class TestGeneralizedGammaDelay:
    def test_pdf_integrates_to_cdf(self):
        d = fixtures.reference_delay()
        for x in (0.3, 1.0, 3.0):
            val, _ = integrate.quad(d.pdf, 1e-12, x, limit=200)
            assert val == pytest.approx(d.cdf(x), abs=1e-8)

    def test_ppf_roundtrip(self):
        d = fixtures.reference_delay()
        q = np.array([0.01, 0.25, 0.5, 0.75, 0.99])
        assert np.allclose(d.cdf(d.ppf(q)), q, atol=1e-12)

    def test_mean_formula_vs_quadrature(self):
        d = fixtures.reference_delay()
        val, _ = integrate.quad(lambda x: x * d.pdf(x), 1e-12, 200.0, limit=400)
        assert d.mean() == pytest.approx(val, rel=1e-8)

    def test_sampling_ks(self):
        d = fixtures.reference_delay()
        x = d.sample(substream(10, "gg-sample"), 20000)
        assert stats.kstest(x, d.cdf).pvalue > 0.01

    def test_scaled_is_scale_family(self):
        d = GeneralizedGammaDelay(2.0, 1.3, 0.5)
        s = d.scaled(2.0)
        x = np.array([0.1, 0.7, 2.0])
        assert np.allclose(s.cdf(2.0 * x), d.cdf(x))
        assert s.mean() == pytest.approx(2.0 * d.mean())

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            GeneralizedGammaDelay(0.0, 1.0, 1.0)

    @given(st.floats(0.3, 5.0), st.floats(0.3, 3.0), st.floats(0.05, 5.0),
           st.floats(0.001, 0.999))
    @settings(max_examples=60, deadline=None)
    def test_ppf_cdf_inverse_property(self, a, b, c, q):
        d = GeneralizedGammaDelay(a, b, c)
        assert d.cdf(d.ppf(q)) == pytest.approx(q, abs=1e-9)


class TestTruncatedDelay:
    def test_mass_and_cdf_limits(self):
        d = fixtures.reference_delay()
        td = TruncatedDelay(d, 0.5, 2.5)
        assert td.cdf(0.5) == 0.0
        assert td.cdf(2.5) == pytest.approx(1.0)
        assert td.mass == pytest.approx(d.cdf(2.5) - d.cdf(0.5))

    def test_pdf_integrates_to_one(self):
        d = fixtures.reference_delay()
        td = TruncatedDelay(d, 0.5, 2.5)
        val, _ = integrate.quad(td.pdf, 0.5, 2.5, limit=200)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_sample_within_window(self):
        d = fixtures.reference_delay()
        td = TruncatedDelay(d, 0.5, 2.5)
        x = td.sample(substream(11, "trunc"), 5000)
        assert np.all((x > 0.5) & (x <= 2.5))
        assert stats.kstest(x, td.cdf).pvalue > 0.01

    def test_negative_lower_clipped(self):
        d = fixtures.reference_delay()
        td = TruncatedDelay(d, -1.0, 1.0)
        assert td.mass == pytest.approx(d.cdf(1.0))

    def test_degenerate_window(self):
        d = fixtures.reference_delay()
        with pytest.raises(DegenerateWindowError):
            TruncatedDelay(d, 500.0, 501.0)
        with pytest.raises(ValueError):
            TruncatedDelay(d, 2.0, 1.0)


class TestSeverityModel:
    def test_cdf_zero_mass(self):
        m = fixtures.reference_severity_x()
        assert m.cdf(0.0, 0.5) == pytest.approx(m.p0)
        assert m.cdf(1e12, 0.5) == pytest.approx(1.0, abs=1e-9)

    def test_moment_vs_quadrature(self):
        # orders 1-2 against adaptive quadrature of the mixture density
        for m in (fixtures.reference_severity_x(),
                  fixtures.reference_severity_y()):
            for zeta in (0.0, 0.5, 2.0):
                shift = m.kappa * np.log1p(365.0 * zeta)
                for order in (1, 2):
                    def integrand(z):
                        total = 0.0
                        for w, mu, sg in zip(m.weights, m.mus, m.sigmas):
                            total += (w * np.exp(order * z)
                                      * stats.norm.pdf(z, mu + shift, sg))
                        return (1.0 - m.p0) * total
                    val, _ = integrate.quad(integrand, -40.0, 60.0, limit=400)
                    assert m.moment(zeta, order) == pytest.approx(val, rel=1e-6)

    def test_delay_coupling_direction(self):
        m = fixtures.reference_severity_x()  # kappa > 0
        assert m.moment(2.0, 1) > m.moment(0.1, 1)

    def test_sample_moments(self):
        m = fixtures.reference_severity_x()
        x = m.sample(0.5, substream(12, "sev"), 400000)
        assert np.mean(x == 0) == pytest.approx(m.p0, abs=0.005)
        se = x.std(ddof=1) / np.sqrt(x.size)
        assert abs(x.mean() - m.moment(0.5, 1)) < 4 * se

    def test_positive_quantile_inverts_mixture(self):
        m = fixtures.reference_severity_x()
        q = np.array([0.05, 0.4, 0.9, 0.99])
        x = m.positive_quantile(q, zeta=0.5)
        # cdf of the positive part alone
        got = (m.cdf(x, 0.5) - m.p0) / (1.0 - m.p0)
        assert np.allclose(got, q, atol=1e-9)

    def test_class_shift(self):
        phi = tuple([0.0, 0.3] + [0.0] * 7)
        m = SeverityModel(0.1, (1.0,), (1.0,), (0.5,), kappa=0.0, phi=phi)
        assert m.moment(0.0, 1, cls=1) == pytest.approx(
            np.exp(0.3) * m.moment(0.0, 1, cls=0))

    def test_validation(self):
        with pytest.raises(ValueError):
            SeverityModel(1.2, (1.0,), (0.0,), (1.0,))
        with pytest.raises(ValueError):
            SeverityModel(0.1, (0.5, 0.6), (0.0, 1.0), (1.0, 1.0))


class TestCrossMoment:
    def test_conditional_independence_product_form(self):
        mx = fixtures.reference_severity_x()
        my = fixtures.reference_severity_y()
        for zeta in (0.0, 0.5, 2.0):
            got = conditional_cross_moment(mx, my, zeta)
            assert got == pytest.approx(
                mx.moment(zeta, 1) * my.moment(zeta, 1), rel=1e-12)

    def test_frank_cross_moment_vs_mc(self):
        models = fixtures.reference_models(dependence="frank")
        mx = models.effective("x")
        my = models.effective("y")
        got = conditional_cross_moment(mx, my, 0.0, copula=models.copula)
        rng = substream(13, "frank-cross")
        u, v = models.copula.sample(rng, 400000)
        x = np.zeros_like(u)
        x[u > mx.p0] = mx.positive_quantile(
            (u[u > mx.p0] - mx.p0) / (1 - mx.p0), 0.0)
        y = np.zeros_like(v)
        y[v > my.p0] = my.positive_quantile(
            (v[v > my.p0] - my.p0) / (1 - my.p0), 0.0)
        prod = x * y
        se = prod.std(ddof=1) / np.sqrt(prod.size)
        assert abs(got - prod.mean()) < 4 * se

    def test_positive_dependence_raises_cross_moment(self):
        models = fixtures.reference_models(dependence="frank")
        mx = models.effective("x")
        my = models.effective("y")
        dep = conditional_cross_moment(mx, my, 0.0, copula=models.copula)
        indep = mx.moment(0.0, 1) * my.moment(0.0, 1)
        assert dep > indep


class TestFrankCopula:
    def test_density_integrates_to_one(self):
        c = FrankCopula(fixtures.FRANK_THETA)
        val, _ = integrate.dblquad(lambda v, u: c.density(u, v),
                                   0.0, 1.0, 0.0, 1.0)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_cdf_margins(self):
        c = FrankCopula(2.0)
        u = np.array([0.2, 0.5, 0.8])
        assert np.allclose(c.cdf(u, 1.0), u, atol=1e-12)
        assert np.allclose(c.cdf(1.0, u), u, atol=1e-12)

    def test_conditional_inverse_roundtrip(self):
        c = FrankCopula(1.413523)
        u, w = 0.3, 0.7
        v = c.conditional_inverse(u, w)
        # derivative of C wrt u at (u, v) must equal w
        eps = 1e-7
        dc = (c.cdf(u + eps, v) - c.cdf(u - eps, v)) / (2 * eps)
        assert dc == pytest.approx(w, abs=1e-6)

    def test_sample_tau(self):
        theta = 1.413523
        c = FrankCopula(theta)
        u, v = c.sample(substream(14, "frank"), 4000)
        tau, _ = stats.kendalltau(u, v)
        assert tau == pytest.approx(frank_tau(theta), abs=0.03)

    def test_sample_uniform_margins(self):
        c = FrankCopula(3.0)
        u, v = c.sample(substream(15, "frank-m"), 20000)
        assert stats.kstest(u, "uniform").pvalue > 0.01
        assert stats.kstest(v, "uniform").pvalue > 0.01

    def test_tau_inversion(self):
        for theta in (-4.0, -0.5, 0.7, 1.413523, 8.0):
            tau = frank_tau(theta)
            assert frank_theta_from_tau(tau) == pytest.approx(theta, abs=1e-8)

    def test_independence_sentinel(self):
        assert frank_theta_from_tau(0.0) == 0.0
        assert frank_tau(0.0) == 0.0

    def test_zero_theta_rejected(self):
        with pytest.raises(ValueError):
            FrankCopula(0.0)


class TestPortfolioModels:
    def test_frank_requires_copula(self):
        from microreserve import PortfolioModels
        with pytest.raises(ValueError):
            PortfolioModels(x=fixtures.reference_severity_x(),
                            y=fixtures.reference_severity_y(),
                            delay=fixtures.reference_delay(),
                            dependence="frank")

    def test_effective_strips_coupling_outside_kappa_mode(self):
        models = fixtures.reference_models(dependence="independent")
        assert models.effective("x").kappa == 0.0
        kap = fixtures.reference_models(dependence="kappa")
        assert kap.effective("x").kappa == pytest.approx(0.29504)
