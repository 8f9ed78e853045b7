import numpy as np
import pytest
from scipy import linalg, special, stats
from statsmodels.tsa.arima_process import arma_acovf

from quadrature import branch_rule
from vtarma.arma import ArmaSpec, acf, innovation_variance
from vtarma.copula import spearman_linear
from vtarma.errors import DataError, InvalidSpecError
from vtarma.estimation import ljung_box
from vtarma.margins import Margin
from vtarma.model import (
    ConditionalState,
    VtArmaModel,
    conditional_state,
    cond_cdf,
    cond_density,
    cond_density_x,
    cond_quantile,
    copula_loglik,
    copula_loglik_terms,
    full_loglik,
    implied_proxy_transform,
    residuals,
    simulate,
    value_at_risk,
)
from vtarma.vtransform import linear, three_param, two_param

CLUSTER_ARMA = ArmaSpec((0.95,), (-0.85,))
CLUSTER_MODEL = VtArmaModel(linear(0.5), CLUSTER_ARMA, Margin("student", eta=3.0))
PSI = (0.01, 0.05, 0.5, 0.95, 0.99)


def random_states(rng, n):
    return [ConditionalState(rng.normal(0, 1), rng.uniform(0.2, 1.0)) for _ in range(n)]


def linear_cdf_below(delta, state, u):
    # closed form for u <= delta with constant Delta
    z = special.ndtri(1 - u / delta)
    return delta * (1 - special.ndtr((z - state.mu_t) / state.sigma_eps))


@pytest.mark.parametrize(
    "vt",
    [linear(0.5), linear(0.35), two_param(0.46, 0.9), three_param(0.55, 1.4, 0.65)],
)
@pytest.mark.parametrize("arma", [ArmaSpec(), ArmaSpec((0.9,), (-0.5,)), ArmaSpec((0.5, 0.2))])
def test_simulated_u_is_uniform(vt, arma):
    # KS needs near-independent draws, so dependent paths are thinned
    stride = 1 if arma.p + arma.q == 0 else 50
    u = simulate(VtArmaModel(vt, arma), 100_000 * stride, seed=1).u[::stride]
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_simulated_laplace_margin():
    m = VtArmaModel(two_param(0.45, 0.9), ArmaSpec((0.95,), (-0.85,)), Margin("laplace", mu=0.2, sigma=1.5))
    x = simulate(m, 100_000, seed=2).x
    assert stats.kstest(x, stats.laplace(loc=0.2, scale=1.5).cdf).pvalue > 0.01


def test_volatility_clustering():
    sim = simulate(CLUSTER_MODEL, 20_000, seed=3)
    band = 3 / np.sqrt(sim.x.size)

    def sample_acf(y, k):
        d = y - y.mean()
        return d[k:] @ d[:-k] / (d @ d)

    abs_acf = np.array([sample_acf(np.abs(sim.x), k) for k in range(1, 21)])
    raw_acf = np.array([sample_acf(sim.x, k) for k in range(1, 21)])
    assert np.all(abs_acf > band)
    assert np.mean(np.abs(raw_acf) < band) >= 0.9


def test_simulation_is_deterministic_and_consistent():
    m = VtArmaModel(two_param(0.45, 0.9), ArmaSpec((0.5,)), Margin("laplace"))
    a, b = simulate(m, 300, seed=4), simulate(m, 300, seed=4)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_allclose(a.v, special.ndtr(a.z))
    np.testing.assert_allclose(m.vt.evaluate(a.u), a.v, atol=1e-10)
    assert simulate(VtArmaModel(linear(0.5), ArmaSpec()), 10, seed=0).x is None


def test_white_noise_copula_loglik_is_zero():
    u = np.random.default_rng(5).uniform(size=500)
    for vt in (linear(0.5), two_param(0.3, 2.0), three_param(0.6, 0.8, 1.3)):
        assert copula_loglik(VtArmaModel(vt, ArmaSpec()), u) == 0.0


def test_copula_loglik_five_point_oracle():
    vt = three_param(0.55, 1.4, 0.65)
    arma = ArmaSpec((0.7,), (-0.3,))
    u = np.array([0.1, 0.52, 0.9, 0.35, 0.61])
    z = special.ndtri(vt.evaluate(u))
    gamma = arma_acovf([1, -0.7], [1, -0.3], nobs=5, sigma2=innovation_variance(arma))
    ref = stats.multivariate_normal(np.zeros(5), linalg.toeplitz(gamma)).logpdf(z) - stats.norm.logpdf(z).sum()
    assert copula_loglik(VtArmaModel(vt, arma), u) == pytest.approx(ref, abs=1e-9)


def test_copula_loglik_prefers_truth():
    rng = np.random.default_rng(6)
    truth = VtArmaModel(two_param(0.46, 0.92), ArmaSpec((0.9,), (-0.6,)))
    u = simulate(truth, 2000, seed=7).u
    best = copula_loglik(truth, u)
    for _ in range(100):
        d = np.clip(0.46 + rng.normal(0, 0.05), 0.2, 0.8)
        k = 0.92 * np.exp(rng.normal(0, 0.3))
        a = np.clip(0.9 + rng.normal(0, 0.05), -0.98, 0.98)
        b = np.clip(-0.6 + rng.normal(0, 0.1), -0.98, 0.98)
        other = VtArmaModel(two_param(d, k), ArmaSpec((a,), (b,)))
        assert copula_loglik(other, u) < best


def test_copula_loglik_rejects_bad_u():
    m = VtArmaModel(linear(0.5), ArmaSpec((0.5,)))
    with pytest.raises(DataError, match="index 1"):
        copula_loglik(m, [0.2, 1.5, 0.3])
    assert copula_loglik_terms(m, [0.2, 0.4]).shape == (2,)


def test_full_loglik_split():
    m = VtArmaModel(two_param(0.45, 0.9), ArmaSpec((0.9,), (-0.5,)), Margin("student", mu=0.1, sigma=2.0, eta=4.0))
    x = simulate(m, 1000, seed=8).x
    ref = np.sum(m.margin.logpdf(x)) + copula_loglik(m, m.margin.cdf(x))
    assert full_loglik(m, x) == pytest.approx(ref, abs=1e-10)
    wn = VtArmaModel(m.vt, ArmaSpec(), m.margin)
    assert full_loglik(wn, x) == pytest.approx(np.sum(stats.t(4.0, 0.1, 2.0).logpdf(x)), rel=1e-12)
    wrong = VtArmaModel(m.vt, m.arma, Margin("student", mu=0.1, sigma=4.0, eta=4.0))
    assert full_loglik(wrong, x) < full_loglik(m, x)
    with pytest.raises(InvalidSpecError):
        full_loglik(VtArmaModel(m.vt, m.arma), x)


def test_cond_density_white_noise_is_one():
    u = np.linspace(0.001, 0.999, 200)
    np.testing.assert_allclose(cond_density(VtArmaModel(two_param(0.4, 1.3), ArmaSpec()), ConditionalState(0, 1), u), 1.0)


def test_cond_density_ar1_is_gaussian_copula():
    a = 0.6
    vt = three_param(0.55, 1.4, 0.65)
    m = VtArmaModel(vt, ArmaSpec((a,)))
    prev = 0.8
    state = conditional_state(m, [prev])
    assert state.sigma_eps == pytest.approx(np.sqrt(1 - a * a))
    u = np.linspace(0.01, 0.99, 99)
    u = u[np.abs(u - vt.delta) > 1e-9]
    z1, z2 = special.ndtri(vt.evaluate(u)), special.ndtri(vt.evaluate(prev))
    c = stats.multivariate_normal([0, 0], [[1, a], [a, 1]]).pdf(np.c_[z1, np.full_like(z1, z2)])
    c /= stats.norm.pdf(z1) * stats.norm.pdf(z2)
    np.testing.assert_allclose(cond_density(m, state, u), c, rtol=1e-10)


def test_cond_density_integrates_to_one():
    rng = np.random.default_rng(9)
    vts = [linear(0.4), two_param(0.46, 0.9), three_param(0.55, 1.4, 0.65)]
    for i, state in enumerate(random_states(rng, 50)):
        vt = vts[i % 3]
        u, w = branch_rule(vt.delta, 400)
        total = np.sum(w * cond_density(VtArmaModel(vt, ArmaSpec((0.5,))), state, u))
        assert total == pytest.approx(1.0, abs=1e-6)


def count_interior_maxima(f):
    return int(np.sum((f[1:-1] > f[:-2]) & (f[1:-1] > f[2:])))


def test_high_volatility_state_is_bimodal():
    sigma = np.sqrt(innovation_variance(CLUSTER_ARMA))
    state = ConditionalState(0.5, sigma)
    x = np.linspace(-15, 15, 2001)
    f = cond_density_x(CLUSTER_MODEL, state, x)
    assert count_interior_maxima(f) == 2
    modes = x[1:-1][(f[1:-1] > f[:-2]) & (f[1:-1] > f[2:])]
    assert modes[0] == pytest.approx(-modes[1]) and modes[1] > 0.5
    # a calm state is unimodal on the data scale
    assert count_interior_maxima(cond_density_x(CLUSTER_MODEL, ConditionalState(-0.5, sigma), x)) == 1


def test_cond_cdf_linear_closed_form():
    rng = np.random.default_rng(10)
    delta = 0.4
    m = VtArmaModel(linear(delta), ArmaSpec((0.5,)))
    u = np.linspace(0.005, delta - 0.005, 40)
    for state in random_states(rng, 20):
        np.testing.assert_allclose(cond_cdf(m, state, u), linear_cdf_below(delta, state, u), atol=1e-10)


def test_cond_quantile_round_trip():
    rng = np.random.default_rng(11)
    vts = [linear(0.4), two_param(0.46, 0.9), three_param(0.55, 1.4, 0.65)]
    for i, state in enumerate(random_states(rng, 15)):
        m = VtArmaModel(vts[i % 3], ArmaSpec((0.5,)))
        q = cond_quantile(m, state, PSI)
        assert np.all(np.diff(q) > 0)
        np.testing.assert_allclose(cond_cdf(m, state, q), PSI, atol=1e-8)


def test_white_noise_quantile_is_margin_quantile():
    margin = Margin("laplace", mu=0.2, sigma=1.5)
    m = VtArmaModel(two_param(0.45, 0.9), ArmaSpec(), margin)
    got = cond_quantile(m, ConditionalState(0.0, 1.0), PSI, scale="data")
    np.testing.assert_allclose(got, margin.quantile(np.array(PSI)), atol=1e-8)


def test_var_monotone_and_sign():
    m = VtArmaModel(two_param(0.46, 0.92), CLUSTER_ARMA, Margin("laplace", sigma=2.0))
    state = ConditionalState(0.3, 0.95)
    var = value_at_risk(m, state, np.array([0.9, 0.95, 0.99, 0.995]))
    assert np.all(var > 0) and np.all(np.diff(var) > 0)
    assert value_at_risk(m, ConditionalState(1.0, 0.95), 0.99) > value_at_risk(m, ConditionalState(-1.0, 0.95), 0.99)
    with pytest.raises(DataError):
        cond_quantile(m, state, [0.5, 1.0])


def test_residuals_white_noise_equal_scores():
    vt = two_param(0.45, 0.9)
    u = np.random.default_rng(12).uniform(size=50)
    np.testing.assert_allclose(residuals(VtArmaModel(vt, ArmaSpec()), u), special.ndtri(vt.evaluate(u)))


def test_residuals_at_true_model():
    m = VtArmaModel(two_param(0.46, 0.92), ArmaSpec((0.95,), (-0.85,)), Margin("laplace"))
    n = 10_000
    x = simulate(m, n, seed=13).x
    r = residuals(m, x, scale="data")
    assert ljung_box(r, 20)[1] > 0.01
    assert ljung_box(np.abs(r), 20)[1] > 0.01
    s2 = innovation_variance(m.arma)
    assert abs(r[100:].var() - s2) < 3 * s2 * np.sqrt(2 / n)


def test_implied_proxy_symmetric():
    m = VtArmaModel(linear(0.5), ArmaSpec(), Margin("laplace", sigma=2.0))
    a = np.linspace(0.1, 20, 50)
    np.testing.assert_allclose(implied_proxy_transform(m, -a), implied_proxy_transform(m, a), rtol=1e-10)


def test_implied_proxy_bitcoin_style_model():
    margin = Margin("double_weibull", mu=0.192, sigma=2.803, eta=0.844)
    m = VtArmaModel(two_param(0.463, 0.939), ArmaSpec((0.965,), (-0.847,)), margin)
    lo, hi = implied_proxy_transform(m, [-10.0, 10.0])
    assert lo == pytest.approx(1.55, abs=0.005)
    assert hi == pytest.approx(1.66, abs=0.005)


def test_implied_proxy_clamped_at_fulcrum():
    m = VtArmaModel(two_param(0.5, 1.2), ArmaSpec(), Margin("laplace"))
    at = implied_proxy_transform(m, 0.0)
    assert np.isfinite(at)
    x = np.linspace(-5, 5, 201)
    t = implied_proxy_transform(m, x)
    assert at == pytest.approx(t.min())
    assert np.all(np.diff(t[x < 0]) < 0) and np.all(np.diff(t[x > 0]) > 0)


def test_rank_autocorrelation_matches_closed_form():
    delta = 0.3
    arma = ArmaSpec((0.9,), (-0.5,))
    m = VtArmaModel(linear(delta), arma, Margin("student", eta=4.0))
    x = simulate(m, 400_000, seed=14).x
    r = stats.rankdata(x)
    for k in range(1, 11):
        got = np.corrcoef(r[k:], r[:-k])[0, 1]
        assert got == pytest.approx(spearman_linear(delta, acf(arma, k)), abs=0.006)


def test_model_json_round_trip():
    m = VtArmaModel(three_param(0.55, 1.4, 0.65), ArmaSpec((0.5,), (0.2,)), Margin("student", eta=3.0))
    assert VtArmaModel.from_dict(m.to_dict()) == m
    assert VtArmaModel.from_dict(VtArmaModel(linear(0.5), ArmaSpec()).to_dict()).margin is None


def test_state_requires_positive_sd():
    with pytest.raises(InvalidSpecError):
        ConditionalState(0.0, 0.0)
