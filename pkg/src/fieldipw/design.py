"""Design matrices for the propensity model."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .dataset import ImputedCorpus
from .errors import DataError

INTERCEPT = "(intercept)"


def _is_binary(col: np.ndarray) -> bool:
    return bool(np.all((col == 0.0) | (col == 1.0)))


@dataclass(frozen=True)
class MainEffects:
    values: np.ndarray
    names: tuple[str, ...]
    kinds: tuple[str, ...]  # "main" or "indicator"


@dataclass(frozen=True)
class Standardization:
    """Column means and sample SDs (n-1) of the continuous main effects.

    0/1 columns pass through unscaled; constant columns are dropped.
    """

    names: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray
    binary: tuple[str, ...]
    constant: tuple[str, ...]

    @classmethod
    def fit(cls, values: np.ndarray, names: Sequence[str]) -> "Standardization":
        values = np.asarray(values, dtype=float)
        if values.shape[0] < 2:
            raise DataError("standardization needs at least two rows")
        scaled, means, sds, binary, constant = [], [], [], [], []
        for j, name in enumerate(names):
            col = values[:, j]
            sd = col.std(ddof=1)
            if np.all(col == col[0]) or not sd > 0:  # sd can underflow for subnormal spreads
                constant.append(name)
            elif _is_binary(col):
                binary.append(name)
            else:
                scaled.append(name)
                means.append(col.mean())
                sds.append(sd)
        return cls(tuple(scaled), np.array(means), np.array(sds), tuple(binary), tuple(constant))

    def transform(self, values: np.ndarray, names: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
        """Apply to columns ``names`` of ``values``; returns kept columns in input order."""
        values = np.asarray(values, dtype=float)
        pos = {n: j for j, n in enumerate(self.names)}
        cols, kept = [], []
        for j, name in enumerate(names):
            if name in self.constant:
                continue
            if name in pos:
                k = pos[name]
                cols.append((values[:, j] - self.means[k]) / self.sds[k])
            elif name in self.binary:
                cols.append(values[:, j])
            else:
                raise DataError(f"column {name!r} was not seen when fitting the standardization")
            kept.append(name)
        out = np.column_stack(cols) if cols else np.empty((values.shape[0], 0))
        return out, tuple(kept)

    def apply(self, corpus: ImputedCorpus) -> MainEffects:
        values, names = _corpus_columns(corpus)
        out, kept = self.transform(values, names)
        indicator = set(corpus.indicator_names)
        return MainEffects(out, kept, tuple("indicator" if n in indicator else "main" for n in kept))


def _corpus_columns(corpus: ImputedCorpus) -> tuple[np.ndarray, tuple[str, ...]]:
    values = np.hstack([corpus.values, corpus.indicators])
    return values, tuple(corpus.covariate_names) + tuple(corpus.indicator_names)


def standardize(corpus: ImputedCorpus) -> tuple[Standardization, MainEffects]:
    values, names = _corpus_columns(corpus)
    std = Standardization.fit(values, names)
    return std, std.apply(corpus)


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    names: tuple[str, ...]
    origins: tuple[tuple[str, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def take_rows(self, idx) -> "DesignMatrix":
        return DesignMatrix(self.values[idx], self.names, self.origins)


def interaction_pairs(mains: MainEffects, policy="mains") -> list[tuple[str, str]]:
    """Resolve an interaction policy to an ordered list of column pairs.

    ``"mains"`` pairs every two covariate columns (indicators excluded),
    ``"all"`` also pairs indicators, ``"none"`` adds nothing, and an explicit
    sequence of ``(a, b)`` tuples is taken as given.
    """
    if isinstance(policy, str):
        if policy == "none":
            return []
        if policy == "mains":
            pool = [n for n, k in zip(mains.names, mains.kinds) if k == "main"]
        elif policy == "all":
            pool = list(mains.names)
        else:
            raise DataError(f"unknown interaction policy {policy!r}")
        return list(combinations(pool, 2))
    pairs = []
    for pair in policy:
        a, b = pair
        for name in (a, b):
            if name not in mains.names:
                raise DataError(f"interaction policy references unknown column {name!r}")
        if a == b:
            raise DataError(f"interaction of {a!r} with itself")
        pairs.append((a, b))
    return pairs


def expand_interactions(mains: MainEffects, policy="mains") -> DesignMatrix:
    if mains.values.shape[1] < 1:
        raise DataError("no main-effect columns")
    pairs = interaction_pairs(mains, policy)
    n = mains.values.shape[0]
    idx = {name: j for j, name in enumerate(mains.names)}
    cols = [np.ones(n), *mains.values.T]
    names = [INTERCEPT, *mains.names]
    prov = [("intercept",), *((k,) for k in mains.kinds)]
    for a, b in pairs:
        cols.append(mains.values[:, idx[a]] * mains.values[:, idx[b]])
        names.append(f"{a}:{b}")
        prov.append(("interaction", a, b))
    if len(set(names)) != len(names):
        raise DataError("duplicate design column names")
    return DesignMatrix(np.column_stack(cols), tuple(names), tuple(prov))


def build_design(corpus: ImputedCorpus, policy="mains") -> tuple[Standardization, DesignMatrix]:
    std, mains = standardize(corpus)
    return std, expand_interactions(mains, policy)


def factor_design(values: Sequence, name: str = "x") -> DesignMatrix:
    """Saturated design for one discrete covariate: intercept plus one dummy per non-first level."""
    values = np.asarray(values)
    levels = np.unique(values)
    cols = [np.ones(len(values))]
    names = [INTERCEPT]
    for lev in levels[1:]:
        cols.append((values == lev).astype(float))
        names.append(f"{name}[{lev}]")
    prov = [("intercept",)] + [("main",)] * (len(names) - 1)
    return DesignMatrix(np.column_stack(cols), tuple(names), tuple(prov))
