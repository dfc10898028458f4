"""Propensity estimation, clipping, and the overlap diagnostic."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .glm import DEFAULT_MAX_ITER, DEFAULT_RIDGE, DEFAULT_TOL, MultinomFit, fit_multinomial, predict_proba

CLIP_LO = 0.001
CLIP_HI = 0.999


@dataclass(frozen=True)
class PropensityMatrix:
    """N x K membership probabilities.

    ``lo``/``hi`` are ``None`` until the matrix has been clipped; ``raw`` keeps
    the unclipped scores.  Rows are not renormalized after clipping.
    """

    values: np.ndarray
    raw: np.ndarray
    clipped: np.ndarray
    lo: float | None = None
    hi: float | None = None
    fit: MultinomFit | None = None

    @property
    def shape(self):
        return self.values.shape

    def own(self, labels) -> np.ndarray:
        labels = np.asarray(labels)
        return self.values[np.arange(len(labels)), labels]


def as_propensity(P) -> PropensityMatrix:
    if isinstance(P, PropensityMatrix):
        return P
    P = np.asarray(P, dtype=float)
    return PropensityMatrix(P, P, np.zeros(P.shape, dtype=bool))


def estimate_propensities(design, labels, K: int, ridge: float = DEFAULT_RIDGE,
                          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> PropensityMatrix:
    fit = fit_multinomial(design, labels, K, ridge=ridge, tol=tol, max_iter=max_iter)
    P = predict_proba(fit, design)
    return PropensityMatrix(P, P, np.zeros(P.shape, dtype=bool), fit=fit)


def clip_scores(P, lo: float = CLIP_LO, hi: float = CLIP_HI) -> PropensityMatrix:
    if not 0 < lo < hi < 1:
        raise ValueError(f"clip bounds must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")
    P = as_propensity(P)
    vals = np.clip(P.values, lo, hi)
    flags = P.clipped | (P.values != vals)
    return PropensityMatrix(vals, P.raw, flags, lo, hi, P.fit)


def tukey_fivenum(x) -> tuple[float, float, float, float, float]:
    """min, lower hinge, median, upper hinge, max (halves include the median when n is odd)."""
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    half = (n + 1) // 2
    return (float(x[0]), float(np.median(x[:half])), float(np.median(x)),
            float(np.median(x[n - half:])), float(x[-1]))


@dataclass(frozen=True)
class OverlapRow:
    assigned: str
    scored: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass(frozen=True)
class OverlapSummary:
    scheme: tuple[str, ...]
    rows: tuple[OverlapRow, ...]

    def get(self, assigned: str, scored: str) -> OverlapRow:
        for r in self.rows:
            if r.assigned == assigned and r.scored == scored:
                return r
        raise KeyError((assigned, scored))

    def medians(self) -> np.ndarray:
        K = len(self.scheme)
        return np.array([r.median for r in self.rows]).reshape(K, K)


def overlap_summary(P, labels, scheme: Sequence[str] | None = None) -> OverlapSummary:
    P = as_propensity(P)
    labels = np.asarray(labels)
    N, K = P.values.shape
    if len(labels) != N:
        raise ValueError("labels do not match the propensity matrix")
    scheme = tuple(scheme) if scheme is not None else tuple(str(k) for k in range(K))
    if len(scheme) != K:
        raise ValueError("scheme length does not match the number of score columns")
    rows = []
    for a in range(K):
        sel = P.values[labels == a]
        if len(sel) == 0:
            raise ValueError(f"category {scheme[a]!r} has no records")
        for s in range(K):
            rows.append(OverlapRow(scheme[a], scheme[s], len(sel), *tukey_fivenum(sel[:, s])))
    return OverlapSummary(scheme, tuple(rows))


OVERLAP_FIELDS = ("assigned", "scored", "n", "min", "q1", "median", "q3", "max")


def write_overlap_csv(summary: OverlapSummary, path, header_comment: str | None = None) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OVERLAP_FIELDS)
        for r in summary.rows:
            w.writerow([r.assigned, r.scored, r.n, *(repr(v) for v in (r.min, r.q1, r.median, r.q3, r.max))])


def read_overlap_csv(path) -> tuple[OverlapSummary, list[str]]:
    """Parse an overlap CSV; returns the summary and any leading ``#`` comment lines."""
    comments, body = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#") and not body:
            comments.append(line[1:].strip())
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(header) != OVERLAP_FIELDS:
        raise ValueError(f"{path}: expected header {','.join(OVERLAP_FIELDS)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(OVERLAP_FIELDS):
            raise ValueError(f"{path}: row {lineno}: expected {len(OVERLAP_FIELDS)} fields")
        try:
            n = int(rec[2])
            nums = [float(v) for v in rec[3:]]
        except ValueError:
            raise ValueError(f"{path}: row {lineno}: non-numeric value") from None
        if n <= 0:
            raise ValueError(f"{path}: category {rec[0]!r} is empty")
        if not all(a <= b for a, b in zip(nums, nums[1:])):
            raise ValueError(f"{path}: row {lineno}: five-number summary out of order")
        rows.append(OverlapRow(rec[0], rec[1], n, *nums))
    assigned = list(dict.fromkeys(r.assigned for r in rows))
    scored = list(dict.fromkeys(r.scored for r in rows))
    for a in assigned:
        got = [r.scored for r in rows if r.assigned == a]
        if got != scored:
            raise ValueError(f"{path}: category {a!r} is missing scored categories {sorted(set(scored) - set(got))}")
    for s in scored:
        if s not in assigned:
            raise ValueError(f"{path}: category {s!r} has no assigned records")
    return OverlapSummary(tuple(scored), tuple(rows)), comments
