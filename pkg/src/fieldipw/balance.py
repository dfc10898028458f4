"""Covariate balance before and after propensity adjustment.

Each covariate is regressed on treatment dummies, optionally together with
K-1 propensity-score columns (the reference category's column is dropped
because score rows sum to one).  Imbalance is the joint Wald test of the
treatment dummies; adjusted means are marginal standardizations, i.e. the
average prediction over the whole sample with everybody set to one category.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import BINARY_COVARIATES, ImputedCorpus
from .design import INTERCEPT, DesignMatrix
from .glm import DEFAULT_MAX_ITER, DEFAULT_RIDGE, DEFAULT_TOL, GlmFit, JointTest, fit_glm, joint_test
from .propensity import as_propensity

GAUSSIAN_COVARIATES = ("number_of_subject_categories", "journal_impact_factor")


def default_family(name: str, values) -> str:
    """Counts -> negbin, 0/1 -> logit; the subject-category count and real-valued covariates -> gaussian."""
    values = np.asarray(values, dtype=float)
    if name in GAUSSIAN_COVARIATES:
        return "gaussian"
    if name in BINARY_COVARIATES or np.all((values == 0) | (values == 1)):
        return "logit"
    if np.all(values >= 0) and np.all(values == np.round(values)):
        return "negbin"
    return "gaussian"


@dataclass(frozen=True)
class BalanceCheck:
    F: float
    test: JointTest
    adjusted_means: np.ndarray
    unadjusted_means: np.ndarray
    fit: GlmFit


def _balance_design(labels, K, scheme, P):
    n = len(labels)
    cols = [np.ones(n)]
    names = [INTERCEPT]
    for t in range(1, K):
        cols.append((labels == t).astype(float))
        names.append(f"T[{scheme[t]}]")
    if P is not None:
        for t in range(1, K):
            cols.append(P[:, t])
            names.append(f"p[{scheme[t]}]")
    return np.column_stack(cols), tuple(names)


def balance_check(
    covariate,
    family: str,
    labels,
    K: int,
    P=None,
    scheme: Sequence[str] | None = None,
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BalanceCheck:
    x = np.asarray(covariate, dtype=float)
    labels = np.asarray(labels)
    scheme = tuple(scheme) if scheme is not None else tuple(str(k) for k in range(K))
    counts = np.bincount(labels, minlength=K)
    if np.any(counts == 0):
        raise ValueError("every category needs at least one record")
    Pv = None if P is None else as_propensity(P).values
    X, names = _balance_design(labels, K, scheme, Pv)

    design = DesignMatrix(X, names, tuple(("main",) for _ in names))
    fit = fit_glm(family, design, x, ridge=ridge, tol=tol, max_iter=max_iter)
    test = joint_test(fit, names[1:K])

    adjusted = np.empty(K)
    for t in range(K):
        Xt = X.copy()
        Xt[:, 1:K] = 0.0
        if t > 0:
            Xt[:, t] = 1.0
        adjusted[t] = fit.predict_mean(Xt).mean()
    unadjusted = np.array([x[labels == t].mean() for t in range(K)])
    return BalanceCheck(test.F, test, adjusted, unadjusted, fit)


@dataclass(frozen=True)
class BalanceRow:
    covariate: str
    family: str
    F_before: float
    F_after: float
    df_num: int
    df_den_before: int
    df_den_after: int
    unadjusted_means: np.ndarray
    adjusted_means_before: np.ndarray
    adjusted_means_after: np.ndarray

    @property
    def reduction_pct(self) -> float:
        if self.F_before == 0:
            return float("nan")
        return 100.0 * (1.0 - self.F_after / self.F_before)


@dataclass(frozen=True)
class BalanceReport:
    rows: tuple[BalanceRow, ...]
    scheme: tuple[str, ...]
    N: int
    p: int

    def row(self, covariate: str) -> BalanceRow:
        for r in self.rows:
            if r.covariate == covariate:
                return r
        raise KeyError(covariate)


def balance_checks(
    corpus: ImputedCorpus,
    P=None,
    family_map: Mapping[str, str] | None = None,
    covariates: Sequence[str] | None = None,
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> dict[str, tuple[str, BalanceCheck]]:
    """One balance check per covariate; ``P=None`` gives the unadjusted pass."""
    family_map = dict(family_map or {})
    names = tuple(covariates) if covariates is not None else corpus.covariate_names
    out = {}
    for name in names:
        x = corpus.column(name)
        family = family_map.get(name) or default_family(name, x)
        out[name] = (family, balance_check(x, family, corpus.labels, corpus.K, P, corpus.scheme, ridge, tol, max_iter))
    return out


def combine_checks(corpus: ImputedCorpus, before, after, p: int = 0) -> BalanceReport:
    rows = []
    for name, (family, b) in before.items():
        a = after[name][1]
        rows.append(BalanceRow(name, family, b.F, a.F, b.test.df_num, b.test.df_den, a.test.df_den,
                               b.unadjusted_means, b.adjusted_means, a.adjusted_means))
    return BalanceReport(tuple(rows), corpus.scheme, corpus.N, p)


def balance_report(
    corpus: ImputedCorpus,
    P,
    family_map: Mapping[str, str] | None = None,
    design=None,
    covariates: Sequence[str] | None = None,
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BalanceReport:
    """Balance rows for every covariate, fitted once without and once with the scores."""
    before = balance_checks(corpus, None, family_map, covariates, ridge, tol, max_iter)
    after = balance_checks(corpus, P, family_map, covariates, ridge, tol, max_iter)
    p = design.values.shape[1] if design is not None else 0
    return combine_checks(corpus, before, after, p)
