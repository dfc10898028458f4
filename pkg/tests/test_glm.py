import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldipw.design import factor_design
from fieldipw.errors import ConvergenceError, SingularInformationError
from fieldipw.glm import (
    fit_glm,
    fit_multinomial,
    gaussian_loglik,
    joint_test,
    logit_loglik,
    multinomial_loglik,
    negbin_loglik,
    penalty_mask,
    predict_proba,
    softmax_ref,
)


def _design(rng, n, p):
    return np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])


def _fd_hessian(f, theta, h=1e-4):
    p = len(theta)
    H = np.empty((p, p))
    for j in range(p):
        e = np.zeros(p)
        e[j] = h
        H[:, j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _nb_data(rng, n=300, alpha=0.7, beta=(1.2, 0.4, -0.3)):
    X = _design(rng, n, len(beta))
    mu = np.exp(X @ np.asarray(beta))
    y = rng.negative_binomial(1 / alpha, 1 / (1 + alpha * mu))
    return X, y.astype(float)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_information_matches_finite_difference_hessian(seed):
    rng = np.random.default_rng(seed)
    X = _design(rng, 50, 3)
    b = rng.normal(scale=0.4, size=3)
    y = X @ b + rng.normal(size=50)
    H = _fd_hessian(lambda t: gaussian_loglik(X, y, t, 2.0)[1], b)
    np.testing.assert_allclose(gaussian_loglik(X, y, b, 2.0)[2], -H, rtol=1e-6, atol=1e-8)

    yb = (rng.random(50) < 0.4).astype(float)
    H = _fd_hessian(lambda t: logit_loglik(X, yb, t)[1], b)
    np.testing.assert_allclose(logit_loglik(X, yb, b)[2], -H, rtol=1e-6, atol=1e-8)

    yc = rng.poisson(3.0, 50).astype(float)
    theta = np.append(b, np.log(0.5))

    def nb_grad(t):
        return negbin_loglik(X, yc, t[:-1], np.exp(t[-1]), with_alpha=True)[1]

    H = _fd_hessian(nb_grad, theta, h=1e-6)
    np.testing.assert_allclose(negbin_loglik(X, yc, b, 0.5, with_alpha=True)[2], -H, rtol=1e-5, atol=1e-6)

    labels = rng.integers(0, 3, 50)
    B = rng.normal(scale=0.3, size=(3, 2))

    def mn_grad(t):
        return multinomial_loglik(X, labels, t.reshape(2, 3).T)[1].T.ravel()

    H = _fd_hessian(mn_grad, B.T.ravel())
    np.testing.assert_allclose(multinomial_loglik(X, labels, B)[2], -H, rtol=1e-6, atol=1e-8)


def test_negbin_loglik_matches_scipy_pmf():
    from scipy.stats import nbinom

    rng = np.random.default_rng(1)
    X, y = _nb_data(rng, 40)
    beta = np.array([1.0, 0.2, -0.1])
    for alpha in (1e-3, 0.3, 5.0):
        mu = np.exp(X @ beta)
        ref = nbinom.logpmf(y, 1 / alpha, 1 / (1 + alpha * mu)).sum()
        assert negbin_loglik(X, y, beta, alpha)[0] == pytest.approx(ref, rel=1e-11)


def test_gaussian_fit_is_least_squares():
    rng = np.random.default_rng(2)
    X = _design(rng, 80, 4)
    y = X @ [1.0, -2.0, 0.5, 3.0] + rng.normal(size=80)
    fit = fit_glm("gaussian", X, y, ridge=0.0)
    ols = sm.OLS(y, X).fit()
    np.testing.assert_allclose(fit.coef, ols.params, rtol=1e-10)
    np.testing.assert_allclose(np.sqrt(np.diag(fit.covariance)), ols.bse, rtol=1e-8)


def test_logit_fit_matches_statsmodels():
    rng = np.random.default_rng(3)
    X = _design(rng, 400, 3)
    y = (rng.random(400) < 1 / (1 + np.exp(-(X @ [0.2, 1.0, -0.7])))).astype(float)
    fit = fit_glm("logit", X, y, ridge=0.0)
    ref = sm.Logit(y, X).fit(disp=0, tol=1e-12)
    np.testing.assert_allclose(fit.coef, ref.params, atol=1e-7)
    np.testing.assert_allclose(np.sqrt(np.diag(fit.covariance)), ref.bse, rtol=1e-6)
    assert fit.loglik == pytest.approx(ref.llf, rel=1e-10)


def test_negbin_fit_matches_statsmodels():
    rng = np.random.default_rng(4)
    X, y = _nb_data(rng, 600)
    fit = fit_glm("negbin", X, y, ridge=0.0)
    ref = sm.NegativeBinomial(y, X, loglike_method="nb2").fit(disp=0, method="bfgs", maxiter=2000, gtol=1e-10)
    np.testing.assert_allclose(fit.coef, ref.params[:-1], atol=1e-5)
    assert fit.alpha == pytest.approx(ref.params[-1], rel=1e-4)
    np.testing.assert_allclose(np.sqrt(np.diag(fit.covariance)), ref.bse[:-1], rtol=1e-3)


def test_negbin_handles_underdispersed_counts():
    rng = np.random.default_rng(5)
    X = _design(rng, 500, 2)
    y = 1 + rng.binomial(2, 0.2, 500)  # variance below the mean
    fit = fit_glm("negbin", X, y.astype(float))
    assert fit.alpha < 1e-6
    po = sm.GLM(y, X, family=sm.families.Poisson()).fit()
    np.testing.assert_allclose(fit.coef, po.params, atol=1e-4)


def test_multinomial_matches_statsmodels():
    rng = np.random.default_rng(6)
    X = _design(rng, 600, 3)
    eta = X @ np.array([[0.3, -0.2], [1.0, -0.5], [-0.4, 0.8]])
    labels = np.array([rng.choice(3, p=p) for p in softmax_ref(eta)])
    fit = fit_multinomial(X, labels, 3, ridge=0.0, tol=1e-12)
    ref = sm.MNLogit(labels, X).fit(disp=0, method="newton", tol=1e-12)
    np.testing.assert_allclose(fit.coef, ref.params, atol=1e-7)
    assert fit.loglik == pytest.approx(ref.llf, rel=1e-10)


def test_reference_relabelling_leaves_probabilities_unchanged():
    rng = np.random.default_rng(7)
    X = _design(rng, 300, 3)
    labels = rng.integers(0, 4, 300)
    perm = np.array([2, 0, 3, 1])
    P = predict_proba(fit_multinomial(X, labels, 4, ridge=0.0, tol=1e-12), X)
    Q = predict_proba(fit_multinomial(X, perm[labels], 4, ridge=0.0, tol=1e-12), X)
    np.testing.assert_allclose(Q[:, perm], P, atol=1e-9)


def test_ridge_shrinks_and_spares_the_intercept():
    rng = np.random.default_rng(8)
    X = _design(rng, 100, 3)
    y = (rng.random(100) < 0.5).astype(float)
    assert penalty_mask(X).tolist() == [0.0, 1.0, 1.0]
    norms = [np.linalg.norm(fit_glm("logit", X, y, ridge=r).coef[1:]) for r in (0.0, 1.0, 10.0, 100.0)]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    big = fit_glm("logit", X, y, ridge=1e8)
    assert np.allclose(big.coef[1:], 0.0, atol=1e-6)
    assert big.coef[0] == pytest.approx(np.log(y.mean() / (1 - y.mean())), abs=1e-4)


def test_penalized_trace_is_monotone():
    rng = np.random.default_rng(9)
    X, y = _nb_data(rng, 300)
    for fit in (fit_glm("negbin", X, y), fit_glm("logit", X, (y > 3).astype(float))):
        trace = np.array(fit.convergence.trace)
        assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[1:]))
        assert fit.convergence.grad_norm <= 1e-8


def test_quasi_separation_is_reported_at_zero_ridge():
    x = np.r_[np.linspace(-2, -0.1, 20), np.linspace(0.1, 2, 20)]
    X = np.column_stack([np.ones(40), x])
    labels = (x > 0).astype(int)
    with pytest.raises(ConvergenceError) as exc:
        fit_multinomial(X, labels, 2, ridge=0.0, max_iter=200)
    assert exc.value.last_iterate is not None
    fit = fit_multinomial(X, labels, 2, ridge=1.0)
    assert np.all(np.isfinite(fit.coef))


def test_collinear_design_needs_ridge():
    rng = np.random.default_rng(10)
    x = rng.normal(size=50)
    X = np.column_stack([np.ones(50), x, 2 * x])
    y = (x > 0) ^ (rng.random(50) < 0.3)
    with pytest.raises(SingularInformationError, match="ridge"):
        fit_glm("logit", X, y.astype(float), ridge=0.0)
    fit_glm("logit", X, y.astype(float), ridge=1e-3)


def test_iteration_cap_raises_with_last_iterate():
    rng = np.random.default_rng(11)
    X, y = _nb_data(rng, 200)
    with pytest.raises(ConvergenceError) as exc:
        fit_glm("negbin", X, y, max_iter=1)
    assert exc.value.n_iter == 1 and exc.value.last_iterate is not None


def test_empty_class_and_label_checks():
    X = np.ones((4, 1))
    with pytest.raises(ValueError, match="empty"):
        fit_multinomial(X, [0, 0, 2, 2], 3)
    with pytest.raises(ValueError, match="labels"):
        fit_multinomial(X, [0, 1, 5, 1], 3)


def test_predict_proba_checks_columns():
    X = factor_design([0, 1, 0, 1, 1], "g")
    fit = fit_multinomial(X, [0, 1, 1, 0, 1], 2)
    with pytest.raises(ValueError, match="shape"):
        predict_proba(fit, np.ones((3, 3)))


def test_joint_test_matches_wald_chi_square():
    rng = np.random.default_rng(12)
    X = _design(rng, 500, 4)
    y = (rng.random(500) < 1 / (1 + np.exp(-(X @ [0.0, 0.5, 0.0, 0.0])))).astype(float)
    fit = fit_glm("logit", X, y, ridge=0.0)
    ref = sm.Logit(y, X).fit(disp=0, tol=1e-12)
    R = np.eye(4)[1:3]
    wald = ref.wald_test(R, scalar=True, use_f=False)
    t = joint_test(fit, ["x1", "x2"])
    assert t.wald == pytest.approx(float(wald.statistic), rel=1e-5)
    assert (t.df_num, t.df_den) == (2, 496)
    with pytest.raises(ValueError, match="x9"):
        joint_test(fit, ["x9"])


@pytest.mark.slow
def test_negbin_wald_intervals_cover_the_truth():
    rng = np.random.default_rng(13)
    beta = np.array([1.2, 0.4, -0.3])
    hits = 0
    reps = 200
    for _ in range(reps):
        X, y = _nb_data(rng, 300, beta=beta)
        fit = fit_glm("negbin", X, y, ridge=0.0)
        se = np.sqrt(np.diag(fit.covariance))
        hits += np.all(np.abs(fit.coef - beta) <= 2.5758 * se)
    # nominal joint coverage of three 99% intervals is at least 97%
    assert hits / reps >= 0.94
