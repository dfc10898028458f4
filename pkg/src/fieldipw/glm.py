"""Maximum-likelihood fitting for gaussian, logit, NB2 and multinomial-logit models.

All fits maximize the log-likelihood minus ``ridge/2 * ||beta||^2`` over the
non-intercept coefficients by Newton's method with step halving, so the
penalized objective never decreases between accepted steps.  Convergence is
declared when the max-norm of the penalized gradient, divided by the number of
observations, falls below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg
from scipy.special import expit, gammaln

from .errors import ConvergenceError, SingularInformationError

FAMILIES = ("gaussian", "logit", "negbin")

DEFAULT_RIDGE = 1e-6
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100

LOG_ALPHA_MIN = np.log(1e-12)
LOG_ALPHA_MAX = np.log(1e6)
ETA_MAX = 700.0
SEPARATION_EPS = 1e-7


@dataclass(frozen=True)
class Convergence:
    n_iter: int
    grad_norm: float
    trace: tuple[float, ...]  # penalized log-likelihood after each accepted step


@dataclass(frozen=True)
class GlmFit:
    family: str
    coef: np.ndarray
    names: tuple[str, ...]
    loglik: float
    information: np.ndarray
    covariance: np.ndarray
    convergence: Convergence
    n: int
    ridge: float
    alpha: float | None = None
    scale: float = 1.0

    def linear_predictor(self, X) -> np.ndarray:
        return _values(X) @ self.coef

    def predict_mean(self, X) -> np.ndarray:
        eta = self.linear_predictor(X)
        if self.family == "gaussian":
            return eta
        if self.family == "logit":
            return expit(eta)
        return np.exp(np.minimum(eta, ETA_MAX))


@dataclass(frozen=True)
class MultinomFit:
    """Coefficients are p x (K-1); class 0 is the reference with a zero predictor."""

    coef: np.ndarray
    names: tuple[str, ...]
    K: int
    ridge: float
    loglik: float
    information: np.ndarray
    convergence: Convergence


@dataclass(frozen=True)
class JointTest:
    F: float
    df_num: int
    df_den: int
    block: tuple[str, ...]
    wald: float


def _values(X) -> np.ndarray:
    return np.asarray(getattr(X, "values", X), dtype=float)


def _names(X, p: int) -> tuple[str, ...]:
    names = getattr(X, "names", None)
    return tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))


def penalty_mask(X: np.ndarray) -> np.ndarray:
    """1 for penalized columns, 0 for all-ones (intercept) columns."""
    return (~np.all(X == 1.0, axis=0)).astype(float)


def _chol_solve(H: np.ndarray, g: np.ndarray, ridge: float) -> np.ndarray:
    try:
        c = linalg.cho_factor(H, lower=False, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        hint = "; refit with ridge > 0" if ridge == 0 else ""
        raise SingularInformationError(f"information matrix is not positive definite{hint}") from None
    return linalg.cho_solve(c, g)


def _inverse(H: np.ndarray, ridge: float) -> np.ndarray:
    return _chol_solve(H, np.eye(H.shape[0]), ridge)


# ---------------------------------------------------------------- likelihoods


def gaussian_loglik(X, y, beta, scale=1.0):
    """Log-likelihood, gradient and information in ``beta`` for fixed variance ``scale``."""
    X = _values(X)
    r = y - X @ beta
    ll = -0.5 * len(y) * np.log(2 * np.pi * scale) - 0.5 * (r @ r) / scale
    return ll, X.T @ r / scale, X.T @ X / scale


def logit_loglik(X, y, beta):
    X = _values(X)
    eta = X @ beta
    mu = expit(eta)
    ll = np.sum(y * eta - np.logaddexp(0.0, eta))
    w = mu * (1.0 - mu)
    return ll, X.T @ (y - mu), X.T @ (X * w[:, None])


def _count_tables(y: np.ndarray, alpha: float):
    """Per-observation sums over j < y of log(1 + j a), j / (1 + j a) and its square."""
    ymax = int(y.max()) if y.size else 0
    j = np.arange(ymax, dtype=float)
    t = j / (1.0 + j * alpha)
    idx = y.astype(np.int64)
    L = np.concatenate([[0.0], np.cumsum(np.log1p(j * alpha))])[idx]
    C1 = np.concatenate([[0.0], np.cumsum(t)])[idx]
    C2 = np.concatenate([[0.0], np.cumsum(t * t)])[idx]
    return L, C1, C2


_SERIES_X = 1e-3
_H_COEF = np.array([(-1) ** n * (n - 1) / n for n in range(2, 10)])  # h(x)/x^2, h = log1p(x) - x/(1+x)
_K_COEF = np.array([(-1) ** n * (n - 1) * (n - 2) / n for n in range(3, 11)])  # k(x)/x^3


def _h_over_x2(x):
    small = x < _SERIES_X
    out = np.empty_like(x)
    xs = x[small]
    out[small] = np.polynomial.polynomial.polyval(xs, _H_COEF)
    xl = x[~small]
    out[~small] = (np.log1p(xl) - xl / (1.0 + xl)) / xl**2
    return out


def _k_over_x3(x):
    small = x < _SERIES_X
    out = np.empty_like(x)
    out[small] = np.polynomial.polynomial.polyval(x[small], _K_COEF)
    xl = x[~small]
    out[~small] = (xl**2 / (1.0 + xl) ** 2 - 2.0 * (np.log1p(xl) - xl / (1.0 + xl))) / xl**3
    return out


def negbin_loglik(X, y, beta, alpha, with_alpha=False):
    """NB2 log-likelihood (Var = mu + alpha mu^2, log link).

    Returns ``(ll, grad, info)``.  With ``with_alpha`` the last parameter is
    ``log(alpha)`` and grad/info cover it jointly with ``beta``.  Terms in
    1/alpha are expanded around alpha*mu = 0, so tiny alpha stays accurate.
    """
    X = _values(X)
    y = np.asarray(y, dtype=float)
    eta = np.minimum(X @ beta, ETA_MAX)
    mu = np.exp(eta)
    a = float(alpha)
    x = a * mu
    l1p = np.log1p(x)
    L, C1, C2 = _count_tables(y, a)
    ll = np.sum(L - (1.0 / a + y) * l1p + y * eta - gammaln(y + 1))
    resid = (y - mu) / (1.0 + x)
    g_beta = X.T @ resid
    w = mu * (1.0 + a * y) / (1.0 + x) ** 2
    I_bb = X.T @ (X * w[:, None])
    if not with_alpha:
        return ll, g_beta, I_bb
    d_a = C1 + mu**2 * _h_over_x2(x) - y * mu / (1.0 + x)
    d_aa = -C2 + mu**3 * _k_over_x3(x) + y * mu**2 / (1.0 + x) ** 2
    g_theta = a * np.sum(d_a)
    h_theta = g_theta + a * a * np.sum(d_aa)
    cross = X.T @ (x * (y - mu) / (1.0 + x) ** 2)
    p = len(beta)
    info = np.empty((p + 1, p + 1))
    info[:p, :p] = I_bb
    info[:p, p] = info[p, :p] = cross
    info[p, p] = -h_theta
    return ll, np.append(g_beta, g_theta), info


def softmax_ref(eta: np.ndarray) -> np.ndarray:
    """Class probabilities from N x (K-1) predictors with a zero reference column."""
    full = np.hstack([np.zeros((eta.shape[0], 1)), eta])
    full -= full.max(axis=1, keepdims=True)
    e = np.exp(full)
    return e / e.sum(axis=1, keepdims=True)


def multinomial_loglik(X, labels, B):
    """Log-likelihood, gradient (p x (K-1)) and information (p(K-1) square)."""
    X = _values(X)
    labels = np.asarray(labels)
    n, p = X.shape
    K = B.shape[1] + 1
    P = softmax_ref(X @ B)
    Y = np.zeros((n, K))
    Y[np.arange(n), labels] = 1.0
    ll = np.sum(np.log(np.maximum(P[np.arange(n), labels], 1e-300)))
    G = X.T @ (Y - P)[:, 1:]
    m = K - 1
    info = np.empty((p * m, p * m))
    for j in range(m):
        pj = P[:, j + 1]
        for k in range(j, m):
            w = pj * ((1.0 if j == k else 0.0) - P[:, k + 1])
            blk = X.T @ (X * w[:, None])
            info[j * p:(j + 1) * p, k * p:(k + 1) * p] = blk
            info[k * p:(k + 1) * p, j * p:(j + 1) * p] = blk.T
    return ll, G, info


# -------------------------------------------------------------------- solver

F_RESOLUTION = 1e-12


def _accept(f, fc, g, gc) -> bool:
    """Ascent test; ties within the objective's rounding resolution go to the smaller gradient."""
    if not np.isfinite(fc):
        return False
    if fc >= f:
        return True
    return f - fc <= F_RESOLUTION * (1.0 + abs(f)) and np.max(np.abs(gc)) < np.max(np.abs(g))


def _newton(
    objective: Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]],
    theta: np.ndarray,
    n: int,
    tol: float,
    max_iter: int,
    ridge: float,
    what: str,
):
    f, g, H = objective(theta)
    trace = [f]
    it = 0
    while True:
        gnorm = np.max(np.abs(g)) / n if g.size else 0.0
        if gnorm <= tol:
            return theta, f, g, H, Convergence(it, float(gnorm), tuple(trace))
        if it >= max_iter:
            hint = " (possible quasi-separation; refit with ridge > 0)" if ridge == 0 else ""
            raise ConvergenceError(
                f"{what} did not converge in {max_iter} iterations, gradient norm {gnorm:.3g}{hint}",
                last_iterate=theta,
                n_iter=it,
                grad_norm=gnorm,
            )
        step = _chol_solve(H, g, ridge)
        t = 1.0
        while True:
            cand = theta + t * step
            fc, gc, Hc = objective(cand)
            if _accept(f, fc, g, gc):
                break
            t *= 0.5
            if t < 1e-12:
                if gnorm <= 1e3 * tol:
                    # at the floating-point floor of the objective
                    return theta, f, g, H, Convergence(it, float(gnorm), tuple(trace))
                raise ConvergenceError(
                    f"{what}: line search failed, gradient norm {gnorm:.3g}",
                    last_iterate=theta,
                    n_iter=it,
                    grad_norm=gnorm,
                )
        theta, f, g, H = cand, fc, gc, Hc
        trace.append(f)
        it += 1


def _penalized(fn, mask, ridge):
    def objective(beta):
        ll, g, H = fn(beta)
        pen = ridge * mask
        return ll - 0.5 * np.sum(pen * beta * beta), g - pen * beta, H + np.diag(pen)

    return objective


def fit_glm(
    family: str,
    X,
    y,
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    alpha: float | None = None,
) -> GlmFit:
    """Fit a single-outcome GLM.

    Parameters
    ----------
    family : {"gaussian", "logit", "negbin"}
    X : DesignMatrix or array (n, p)
    y : array (n,)
    ridge : float
        L2 penalty on coefficients of non-intercept columns.
    alpha : float, optional
        negbin only: hold the dispersion fixed instead of estimating it.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    Xv = _values(X)
    y = np.asarray(y, dtype=float)
    n, p = Xv.shape
    if len(y) != n:
        raise ValueError(f"X has {n} rows but y has {len(y)} entries")
    names = _names(X, p)
    mask = penalty_mask(Xv)

    if family == "gaussian":
        obj = _penalized(lambda b: gaussian_loglik(Xv, y, b), mask, ridge)
        beta, f, g, H, conv = _newton(obj, np.zeros(p), n, tol, max_iter, ridge, "gaussian fit")
        rss = float(np.sum((y - Xv @ beta) ** 2))
        scale = rss / (n - p) if n > p else 0.0
        info = H
        cov = scale * _inverse(H, ridge)
        ll = -0.5 * n * (np.log(2 * np.pi * rss / n) + 1) if rss > 0 else np.inf
        return GlmFit(family, beta, names, float(ll), info, cov, conv, n, ridge, scale=scale)

    if family == "logit":
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("logit outcome must be 0/1")
        obj = _penalized(lambda b: logit_loglik(Xv, y, b), mask, ridge)
        beta, f, g, H, conv = _newton(obj, np.zeros(p), n, tol, max_iter, ridge, "logit fit")
        if ridge == 0:
            mu = expit(Xv @ beta)
            if np.min(np.minimum(mu, 1 - mu)) < SEPARATION_EPS:
                raise ConvergenceError("fitted probabilities reach 0 or 1 (quasi-separation); refit with ridge > 0",
                                       last_iterate=beta, n_iter=conv.n_iter, grad_norm=conv.grad_norm)
        return GlmFit(family, beta, names, float(obj(beta)[0] + 0.5 * ridge * np.sum(mask * beta**2)),
                      H, _inverse(H, ridge), conv, n, ridge)

    if np.any(y < 0) or np.any(y != np.round(y)):
        raise ValueError("negbin outcome must be non-negative integers")
    return _fit_negbin(Xv, y, names, mask, ridge, tol, max_iter, alpha)


def _negbin_start(X, y, mask, ridge):
    z = np.log(y + 0.5)
    A = X.T @ X + np.diag(np.maximum(ridge, 1e-8) * mask + 1e-10)
    beta = linalg.solve(A, X.T @ z, assume_a="pos")
    mu = np.exp(np.minimum(X @ beta, ETA_MAX))
    # rescale so fitted mean matches the sample mean
    if np.any(mask == 0):
        beta[np.argmin(mask)] += np.log(y.mean() + 1e-12) - np.log(mu.mean())
    return beta


def _fit_negbin(X, y, names, mask, ridge, tol, max_iter, fixed_alpha):
    n, p = X.shape
    beta = _negbin_start(X, y, mask, ridge)
    if fixed_alpha is not None:
        if fixed_alpha <= 0:
            raise ValueError("alpha must be positive")
        obj = _penalized(lambda b: negbin_loglik(X, y, b, fixed_alpha), mask, ridge)
        beta, f, g, H, conv = _newton(obj, beta, n, tol, max_iter, ridge, "negbin fit")
        ll = f + 0.5 * ridge * np.sum(mask * beta**2)
        return GlmFit("negbin", beta, names, float(ll), H, _inverse(H, ridge), conv, n, ridge, alpha=fixed_alpha)

    mu = np.exp(np.minimum(X @ beta, ETA_MAX))
    mom = np.sum((y - mu) ** 2 - mu) / np.sum(mu**2)
    log_alpha = float(np.clip(np.log(max(mom, 1e-4)), LOG_ALPHA_MIN, LOG_ALPHA_MAX))

    def joint(theta):
        ll, g, info = negbin_loglik(X, y, theta[:p], np.exp(theta[p]), with_alpha=True)
        pen = ridge * mask
        g[:p] -= pen * theta[:p]
        info[:p, :p] += np.diag(pen)
        return ll - 0.5 * np.sum(pen * theta[:p] ** 2), g, info

    trace: list[float] = []
    total = 0
    for _ in range(max_iter):
        a = np.exp(log_alpha)
        obj = _penalized(lambda b: negbin_loglik(X, y, b, a), mask, ridge)
        beta, f, _, _, conv = _newton(obj, beta, n, tol, max_iter, ridge, "negbin fit (coefficients)")
        trace.extend(conv.trace[1:] if trace else conv.trace)
        total += conv.n_iter
        log_alpha, f, moved = _alpha_step(joint, beta, log_alpha, f, n, tol)
        if moved:
            trace.append(f)
            total += 1
        _, g, info = joint(np.append(beta, log_alpha))
        gnorm = np.max(np.abs(g)) / n
        at_floor = log_alpha <= LOG_ALPHA_MIN and g[p] < 0
        if gnorm <= tol or (at_floor and np.max(np.abs(g[:p])) / n <= tol):
            break
    else:
        raise ConvergenceError(f"negbin fit did not converge in {max_iter} outer iterations",
                               last_iterate=np.append(beta, log_alpha), n_iter=total, grad_norm=gnorm)
    alpha = float(np.exp(log_alpha))
    theta = np.append(beta, log_alpha)
    f, g, info = joint(theta)
    try:
        cov = _inverse(info, ridge)[:p, :p]
    except SingularInformationError:
        # dispersion pinned at its floor: treat it as known
        cov = _inverse(info[:p, :p], ridge)
    conv = Convergence(total, float(np.max(np.abs(g[:p] if at_floor else g)) / n), tuple(trace))
    ll = f + 0.5 * ridge * np.sum(mask * beta**2)
    return GlmFit("negbin", beta, names, float(ll), info[:p, :p], cov, conv, n, ridge, alpha=alpha)


def _alpha_step(joint, beta, log_alpha, f, n, tol, max_inner=50):
    """1-D Newton on log(alpha) with step halving; returns (log_alpha, objective, moved)."""
    moved = False
    for _ in range(max_inner):
        fa, g, info = joint(np.append(beta, log_alpha))
        ga, ha = g[-1], -info[-1, -1]
        if abs(ga) / n <= tol:
            break
        step = -ga / ha if ha < 0 else np.sign(ga)
        t = 1.0
        while t > 1e-12:
            cand = float(np.clip(log_alpha + t * step, LOG_ALPHA_MIN, LOG_ALPHA_MAX))
            fc, gc, _ = joint(np.append(beta, cand))
            if cand != log_alpha and _accept(fa, fc, g[-1:], gc[-1:]):
                break
            t *= 0.5
        else:
            break
        log_alpha, f, moved = cand, fc, True
        if cand == LOG_ALPHA_MIN:
            break
    return log_alpha, f, moved


def fit_multinomial(
    X,
    labels,
    K: int,
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MultinomFit:
    """Multinomial logit with reference class 0."""
    Xv = _values(X)
    labels = np.asarray(labels)
    n, p = Xv.shape
    if K < 2:
        raise ValueError("need K >= 2 classes")
    if len(labels) != n:
        raise ValueError(f"X has {n} rows but {len(labels)} labels")
    if labels.min() < 0 or labels.max() >= K:
        raise ValueError("labels must lie in 0..K-1")
    counts = np.bincount(labels, minlength=K)
    if np.any(counts == 0):
        raise ValueError(f"empty class(es): {np.flatnonzero(counts == 0).tolist()}")
    mask = np.tile(penalty_mask(Xv), K - 1)
    m = K - 1

    def objective(theta):
        B = theta.reshape(m, p).T
        ll, G, info = multinomial_loglik(Xv, labels, B)
        pen = ridge * mask
        return ll - 0.5 * np.sum(pen * theta**2), G.T.ravel() - pen * theta, info + np.diag(pen)

    theta, f, g, H, conv = _newton(objective, np.zeros(p * m), n, tol, max_iter, ridge, "multinomial fit")
    B = theta.reshape(m, p).T.copy()
    if ridge == 0:
        P = softmax_ref(Xv @ B)
        if np.min(P) < SEPARATION_EPS:
            raise ConvergenceError("fitted probabilities reach 0 or 1 (quasi-separation); refit with ridge > 0",
                                   last_iterate=B, n_iter=conv.n_iter, grad_norm=conv.grad_norm)
    ll = f + 0.5 * ridge * np.sum(mask * theta**2)
    return MultinomFit(B, _names(X, p), K, ridge, float(ll), H, conv)


def predict_proba(fit: MultinomFit, X) -> np.ndarray:
    Xv = _values(X)
    if Xv.ndim != 2 or Xv.shape[1] != fit.coef.shape[0]:
        raise ValueError(f"X has shape {Xv.shape}, fit expects {fit.coef.shape[0]} columns")
    names = getattr(X, "names", None)
    if names is not None and tuple(names) != fit.names:
        raise ValueError("design columns do not match the fitted model")
    return softmax_ref(Xv @ fit.coef)


def joint_test(fit: GlmFit, block: Sequence[str], n: int | None = None) -> JointTest:
    """Wald test of ``block = 0`` reported on the F scale (W / q, denominator df n - p)."""
    block = tuple(block)
    if not block:
        raise ValueError("empty coefficient block")
    missing = [b for b in block if b not in fit.names]
    if missing:
        raise ValueError(f"coefficients not in fit: {missing}")
    idx = [fit.names.index(b) for b in block]
    b = fit.coef[idx]
    V = fit.covariance[np.ix_(idx, idx)]
    try:
        c = linalg.cho_factor(V)
    except (linalg.LinAlgError, ValueError):
        if np.allclose(b, 0.0, atol=1e-12) and np.allclose(V, 0.0):
            W = 0.0
        else:
            raise SingularInformationError("block covariance is singular") from None
    else:
        W = float(b @ linalg.cho_solve(c, b))
    q = len(block)
    n = fit.n if n is None else n
    return JointTest(max(W, 0.0) / q, q, n - len(fit.coef), block, max(W, 0.0))
