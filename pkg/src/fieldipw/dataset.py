"""Corpus ingestion, multi-label resolution, scheme aggregation and imputation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .rng import choose_index

log = logging.getLogger(__name__)

COVARIATES = (
    "number_of_subject_categories",
    "number_of_pages",
    "number_of_coauthors",
    "number_of_author_addresses",
    "number_of_joined_countries",
    "usa",
    "europe",
    "asia",
    "number_of_keywords",
    "number_of_title_words",
    "number_of_cited_references",
    "number_of_linked_cited_references",
    "journal_impact_factor",
)
BINARY_COVARIATES = ("usa", "europe", "asia")
REAL_COVARIATES = ("journal_impact_factor",)
CORE_FIELDS = ("id", "year", "citations", "categories")
MANDATORY_FIELDS = ("id", "citations", "categories")

LABELS = {
    "number_of_subject_categories": "Number of subject categories",
    "number_of_pages": "Number of pages",
    "number_of_coauthors": "Number of co-authors",
    "number_of_author_addresses": "Number of author addresses",
    "number_of_joined_countries": "Number of joined countries",
    "usa": "USA",
    "europe": "Europe",
    "asia": "Asia",
    "number_of_keywords": "Number of keywords",
    "number_of_title_words": "Number of title words",
    "number_of_cited_references": "Number of cited references",
    "number_of_linked_cited_references": "Number of linked cited references",
    "journal_impact_factor": "Journal Impact Factor",
}


@dataclass(frozen=True)
class PaperRecord:
    """One paper.  A covariate value of ``None`` means the cell was absent."""

    id: str
    citations: int
    categories: tuple[str, ...]
    year: int | None = None
    covariates: Mapping[str, float | None] = field(default_factory=dict)

    def __post_init__(self):
        if self.citations < 0:
            raise DataError(f"record {self.id!r}: negative citations")
        if not self.categories:
            raise DataError(f"record {self.id!r}: empty category set")
        for name in BINARY_COVARIATES:
            v = self.covariates.get(name)
            if v is not None and v not in (0, 1):
                raise DataError(f"record {self.id!r}: {name} must be 0 or 1, got {v}")
        cited = self.covariates.get("number_of_cited_references")
        linked = self.covariates.get("number_of_linked_cited_references")
        if cited is not None and linked is not None and linked > cited:
            raise DataError(f"record {self.id!r}: linked cited references exceed cited references")


@dataclass(frozen=True)
class LabeledCorpus:
    records: tuple[PaperRecord, ...]
    labels: np.ndarray
    scheme: tuple[str, ...]
    seed: int
    covariate_names: tuple[str, ...]
    dropped: int = 0

    @property
    def K(self) -> int:
        return len(self.scheme)

    @property
    def N(self) -> int:
        return len(self.records)

    @property
    def label_codes(self) -> list[str]:
        return [self.scheme[t] for t in self.labels]

    @property
    def citations(self) -> np.ndarray:
        return np.array([r.citations for r in self.records], dtype=float)


@dataclass(frozen=True)
class ImputedCorpus:
    """Completed covariates plus one 0/1 indicator per covariate that had gaps."""

    corpus: LabeledCorpus
    values: np.ndarray
    indicators: np.ndarray
    indicator_names: tuple[str, ...]
    indicator_sources: tuple[str, ...]

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return self.corpus.covariate_names

    @property
    def labels(self) -> np.ndarray:
        return self.corpus.labels

    @property
    def scheme(self) -> tuple[str, ...]:
        return self.corpus.scheme

    @property
    def K(self) -> int:
        return self.corpus.K

    @property
    def N(self) -> int:
        return self.corpus.N

    @property
    def citations(self) -> np.ndarray:
        return self.corpus.citations

    def column(self, name: str) -> np.ndarray:
        if name in self.indicator_names:
            return self.indicators[:, self.indicator_names.index(name)]
        if name not in self.covariate_names:
            raise KeyError(name)
        return self.values[:, self.covariate_names.index(name)]


def ordered_covariates(names: Iterable[str]) -> tuple[str, ...]:
    """Known covariates in their canonical order, then any others as first seen."""
    seen = list(dict.fromkeys(names))
    known = [c for c in COVARIATES if c in seen]
    return tuple(known + [c for c in seen if c not in COVARIATES])


def _parse_number(text: str, name: str, rownum: int) -> float | None:
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {rownum}: column {name!r} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"row {rownum}: column {name!r} is not finite")
    if name in COVARIATES and name not in REAL_COVARIATES:
        if value != int(value):
            raise DataError(f"row {rownum}: column {name!r} must be an integer, got {text!r}")
        return int(value)
    return value


def load_corpus(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    delimiter: str = ";",
) -> list[PaperRecord]:
    """Read a UTF-8 CSV of papers.

    ``schema`` maps logical field names (``id``, ``citations``, ``categories``,
    ``year`` and covariate names) to CSV header names; unmapped header columns
    keep their own names.  Every non-core column is read as a covariate and an
    empty cell becomes an absent value.  ``delimiter`` splits the category cell.
    """
    path = Path(path)
    schema = dict(schema or {})
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        for logical, column in schema.items():
            if column not in header:
                raise DataError(f"schema maps {logical!r} to unknown column {column!r}")
        rename = {column: logical for logical, column in schema.items()}
        fields = [rename.get(h, h) for h in header]
        if len(set(fields)) != len(fields):
            raise DataError(f"{path}: duplicate column after schema mapping")
        for name in MANDATORY_FIELDS:
            if name not in fields:
                raise DataError(f"{path}: mandatory column {name!r} missing")
        cov_names = [f for f in fields if f not in CORE_FIELDS]

        records = []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(fields):
                raise DataError(f"row {rownum}: expected {len(fields)} fields, got {len(row)}")
            cells = dict(zip(fields, row))
            citations = _parse_number(cells["citations"], "citations", rownum)
            if citations is None or citations != int(citations):
                raise DataError(f"row {rownum}: citations must be an integer")
            if citations < 0:
                raise DataError(f"row {rownum}: negative citations ({int(citations)})")
            cats = tuple(dict.fromkeys(c.strip() for c in cells["categories"].split(delimiter) if c.strip()))
            if not cats:
                raise DataError(f"row {rownum}: no categories")
            year = None
            if "year" in cells and cells["year"].strip():
                y = _parse_number(cells["year"], "year", rownum)
                year = int(y)
            covs = {name: _parse_number(cells[name], name, rownum) for name in cov_names}
            try:
                records.append(PaperRecord(cells["id"].strip(), int(citations), cats, year, covs))
            except DataError as exc:
                raise DataError(f"row {rownum}: {exc}") from None
    return records


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) or float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def write_corpus(records: Sequence[PaperRecord], path: str | Path, delimiter: str = ";") -> None:
    names = ordered_covariates(n for r in records for n in r.covariates)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "year", "citations", "categories", *names])
        for r in records:
            w.writerow([
                r.id,
                "" if r.year is None else r.year,
                r.citations,
                delimiter.join(r.categories),
                *(_fmt(r.covariates.get(n)) for n in names),
            ])


def load_scheme(path: str | Path) -> list[str]:
    """One category code per line; blank lines and ``#`` comments ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [s.strip() for s in lines if s.strip() and not s.lstrip().startswith("#")]


def load_mapping(path: str | Path) -> dict[str, str]:
    """Two-column CSV ``category,supercategory``; a header row is optional."""
    mapping: dict[str, str] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rownum, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: row {rownum}: expected 2 fields")
            src, dst = row[0].strip(), row[1].strip()
            if rownum == 1 and (src, dst) == ("category", "supercategory"):
                continue
            mapping[src] = dst
    return mapping


def single_category_only(records: Sequence[PaperRecord]) -> list[PaperRecord]:
    return [r for r in records if len(r.categories) == 1]


def resolve_multilabel(records: Sequence[PaperRecord], scheme: Sequence[str], seed: int) -> LabeledCorpus:
    """Give each record exactly one treatment from ``scheme``.

    A record with m eligible categories receives each with probability 1/m;
    the draw is keyed by the record's input position and ``seed``.  Records
    with no category in the scheme are dropped.
    """
    scheme = tuple(scheme)
    if not scheme:
        raise DataError("empty category scheme")
    if len(set(scheme)) != len(scheme):
        raise DataError("duplicate category in scheme")
    kept, labels = [], []
    for i, rec in enumerate(records):
        eligible = [t for t, code in enumerate(scheme) if code in rec.categories]
        if not eligible:
            continue
        pick = eligible[0] if len(eligible) == 1 else eligible[choose_index(seed, i, len(eligible))]
        kept.append(rec)
        labels.append(pick)
    dropped = len(records) - len(kept)
    if not kept:
        raise DataError("no record has a category in the scheme")
    if dropped:
        log.info("dropped %d of %d records with no category in the scheme", dropped, len(records))
    names = ordered_covariates(n for r in kept for n in r.covariates)
    return LabeledCorpus(tuple(kept), np.array(labels, dtype=np.int64), scheme, seed, names, dropped)


def aggregate_to_scheme(corpus: LabeledCorpus, mapping: Mapping[str, str]) -> LabeledCorpus:
    used = [corpus.scheme[t] for t in np.unique(corpus.labels)]
    for code in used:
        if code not in mapping:
            raise DataError(f"category {code!r} has no entry in the aggregation mapping")
    targets = {mapping[c] for c in used}
    scheme = tuple(dict.fromkeys(s for s in mapping.values() if s in targets))
    index = {s: k for k, s in enumerate(scheme)}
    labels = np.array([index[mapping[corpus.scheme[t]]] for t in corpus.labels], dtype=np.int64)
    return LabeledCorpus(corpus.records, labels, scheme, corpus.seed, corpus.covariate_names, corpus.dropped)


def impute_missing(corpus: LabeledCorpus) -> ImputedCorpus:
    """Constant imputation (0) plus missingness indicators."""
    names = corpus.covariate_names
    raw = np.array(
        [[np.nan if r.covariates.get(n) is None else float(r.covariates[n]) for n in names] for r in corpus.records],
        dtype=float,
    ).reshape(corpus.N, len(names))
    missing = np.isnan(raw)
    has_gap = missing.any(axis=0)
    sources = tuple(n for n, g in zip(names, has_gap) if g)
    indicators = missing[:, has_gap].astype(float)
    values = np.where(missing, 0.0, raw)
    return ImputedCorpus(corpus, values, indicators, tuple(f"{n}_missing" for n in sources), sources)
