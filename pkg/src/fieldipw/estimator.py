"""Inverse-probability-weighted treatment means and their differences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .propensity import as_propensity


def _fsum(x) -> float:
    return math.fsum(np.asarray(x, dtype=float).tolist())


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    labels: np.ndarray
    sums: np.ndarray  # per category


def ipw_weights(P, labels) -> WeightVector:
    """w_i = 1 / P[i, label_i]."""
    P = as_propensity(P)
    labels = np.asarray(labels)
    own = P.own(labels)
    if np.any(~np.isfinite(own)) or np.any(own <= 0):
        bad = int(np.flatnonzero(~(own > 0))[0])
        raise ValueError(f"record {bad}: own-category score {own[bad]} is not positive; clip scores first")
    w = 1.0 / own
    K = P.values.shape[1]
    sums = np.array([_fsum(w[labels == t]) for t in range(K)])
    return WeightVector(w, labels, sums)


@dataclass(frozen=True)
class IpwEstimates:
    scheme: tuple[str, ...]
    n: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    weighted_mean: np.ndarray
    weighted_sd: np.ndarray
    ess: np.ndarray
    se: np.ndarray  # linearized SE of weighted_mean, descriptive only

    @property
    def K(self) -> int:
        return len(self.scheme)


def ipw_estimates(y, weights, labels, K: int, scheme: Sequence[str] | None = None) -> IpwEstimates:
    """Per-category unweighted and weighted summaries.

    The weighted SD divides by the sum of weights.  ``sd`` is the ordinary
    sample SD (n - 1 divisor).
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    labels = np.asarray(labels)
    if not (len(y) == len(w) == len(labels)):
        raise ValueError("y, weights and labels must have equal length")
    scheme = tuple(scheme) if scheme is not None else tuple(str(k) for k in range(K))
    cols = {k: np.zeros(K) for k in ("n", "mean", "sd", "wmean", "wsd", "ess", "se")}
    for t in range(K):
        sel = labels == t
        yt, wt = y[sel], w[sel]
        n = len(yt)
        if n == 0:
            raise ValueError(f"category {scheme[t]!r} has no records")
        sw = _fsum(wt)
        if not sw > 0:
            raise ValueError(f"category {scheme[t]!r} has zero weight sum")
        m = _fsum(yt) / n
        mw = _fsum(wt * yt) / sw
        cols["n"][t] = n
        cols["mean"][t] = m
        cols["sd"][t] = math.sqrt(_fsum((yt - m) ** 2) / (n - 1)) if n > 1 else 0.0
        cols["wmean"][t] = mw
        cols["wsd"][t] = math.sqrt(_fsum(wt * (yt - mw) ** 2) / sw)
        cols["ess"][t] = sw * sw / _fsum(wt * wt)
        cols["se"][t] = math.sqrt(_fsum((wt * (yt - mw)) ** 2)) / sw
    return IpwEstimates(scheme, cols["n"].astype(int), cols["mean"], cols["sd"], cols["wmean"],
                        cols["wsd"], cols["ess"], cols["se"])


def ace_matrix(est: IpwEstimates, weighted: bool = True) -> np.ndarray:
    """A[s, t] = mu_s - mu_t; ``weighted=False`` gives the naive (prima facie) differences."""
    mu = est.weighted_mean if weighted else est.mean
    return mu[:, None] - mu[None, :]


def stratified_ace(y, stratum, labels) -> float:
    """Mean difference (treatment 0 minus treatment 1) averaged over strata with marginal stratum weights."""
    y = np.asarray(y, dtype=float)
    stratum = np.asarray(stratum)
    labels = np.asarray(labels)
    if set(np.unique(labels).tolist()) - {0, 1}:
        raise ValueError("stratified_ace needs exactly two treatments coded 0/1")
    N = len(y)
    total = 0.0
    for s in np.unique(stratum):
        in_s = stratum == s
        a, b = y[in_s & (labels == 0)], y[in_s & (labels == 1)]
        if len(a) == 0 or len(b) == 0:
            raise ValueError(f"stratum {s!r} lacks one of the treatments")
        total += in_s.sum() / N * (a.mean() - b.mean())
    return float(total)


def phi_coefficient(a, b) -> float:
    a = np.asarray(a).astype(int)
    b = np.asarray(b).astype(int)
    for v, name in ((a, "a"), (b, "b")):
        if not set(np.unique(v).tolist()) <= {0, 1}:
            raise ValueError(f"{name} must be 0/1")
        if len(np.unique(v)) < 2:
            raise ValueError(f"{name} is constant")
    n11 = np.sum((a == 1) & (b == 1))
    n00 = np.sum((a == 0) & (b == 0))
    n10 = np.sum((a == 1) & (b == 0))
    n01 = np.sum((a == 0) & (b == 1))
    den = math.sqrt((n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00))
    return float((n11 * n00 - n10 * n01) / den)
