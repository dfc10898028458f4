"""In-memory analysis of a list of records, without touching the file system."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import ImputedCorpus, PaperRecord, impute_missing, resolve_multilabel
from .design import DesignMatrix, build_design
from .estimator import IpwEstimates, WeightVector, ace_matrix, ipw_estimates, ipw_weights
from .glm import DEFAULT_MAX_ITER, DEFAULT_RIDGE, DEFAULT_TOL
from .propensity import CLIP_HI, CLIP_LO, PropensityMatrix, clip_scores, estimate_propensities


@dataclass(frozen=True)
class Analysis:
    corpus: ImputedCorpus
    design: DesignMatrix
    propensity: PropensityMatrix  # clipped
    weights: WeightVector
    estimates: IpwEstimates

    @property
    def ace(self) -> np.ndarray:
        return ace_matrix(self.estimates, weighted=True)

    @property
    def naive(self) -> np.ndarray:
        return ace_matrix(self.estimates, weighted=False)


def analyze(
    records: Sequence[PaperRecord],
    scheme: Sequence[str],
    seed: int = 0,
    interactions="mains",
    ridge: float = DEFAULT_RIDGE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    clip: tuple[float, float] = (CLIP_LO, CLIP_HI),
) -> Analysis:
    """Label, impute, fit propensities, clip, weight and estimate."""
    corpus = impute_missing(resolve_multilabel(records, scheme, seed))
    _, design = build_design(corpus, interactions)
    raw = estimate_propensities(design, corpus.labels, corpus.K, ridge, tol, max_iter)
    P = clip_scores(raw, *clip)
    w = ipw_weights(P, corpus.labels)
    est = ipw_estimates(corpus.citations, w.weights, corpus.labels, corpus.K, corpus.scheme)
    return Analysis(corpus, design, P, w, est)
