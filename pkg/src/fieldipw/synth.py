"""Synthetic corpora with known treatment assignment and potential outcomes."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.special import softmax
from scipy.stats import poisson

from .dataset import COVARIATES, PaperRecord, write_corpus
from .rng import SYNTH_RNG_NAME, philox


@dataclass(frozen=True)
class CovariateSpec:
    """Marginal distribution of one covariate.

    kind is one of ``nb`` (offset + negative binomial with the given mean and
    shape), ``poisson`` (offset + Poisson), ``bernoulli``, ``lognormal``
    (given mean and sd), or ``binomial_of`` (Binomial(value of ``of``, p)).
    """

    kind: str
    mean: float = 0.0
    shape: float = 1.0
    p: float = 0.5
    sd: float = 1.0
    offset: int = 0
    max: int | None = None
    of: str | None = None
    decimals: int = 2


CORPUS_COVARIATES: dict[str, CovariateSpec] = {
    "number_of_subject_categories": CovariateSpec("poisson", mean=2.2, offset=1, max=6),
    "number_of_pages": CovariateSpec("nb", mean=9.8, shape=2.0),
    "number_of_coauthors": CovariateSpec("nb", mean=5.45, shape=1.5, offset=1),
    "number_of_author_addresses": CovariateSpec("nb", mean=3.32, shape=3.0, offset=1),
    "number_of_joined_countries": CovariateSpec("poisson", mean=1.3, offset=1),
    "usa": CovariateSpec("bernoulli", p=0.36),
    "europe": CovariateSpec("bernoulli", p=0.40),
    "asia": CovariateSpec("bernoulli", p=0.16),
    "number_of_keywords": CovariateSpec("nb", mean=5.21, shape=3.0, max=10),
    "number_of_title_words": CovariateSpec("nb", mean=11.99, shape=6.0, offset=1),
    "number_of_cited_references": CovariateSpec("nb", mean=28.46, shape=2.2),
    "number_of_linked_cited_references": CovariateSpec("binomial_of", p=0.68, of="number_of_cited_references"),
    "journal_impact_factor": CovariateSpec("lognormal", mean=2.26, sd=2.55),
}


def nominal_moments(name: str, specs: Mapping[str, CovariateSpec]) -> tuple[float, float]:
    """Mean and SD implied by a spec, ignoring truncation at ``max``."""
    s = specs[name]
    if s.kind == "nb":
        m = s.mean - s.offset
        return s.mean, float(np.sqrt(m + m * m / s.shape))
    if s.kind == "poisson":
        return s.mean, float(np.sqrt(s.mean - s.offset))
    if s.kind == "bernoulli":
        return s.p, float(np.sqrt(s.p * (1 - s.p)))
    if s.kind == "lognormal":
        return s.mean, s.sd
    if s.kind == "binomial_of":
        m, sd = nominal_moments(s.of, specs)
        return s.p * m, float(np.sqrt(s.p * (1 - s.p) * m + s.p**2 * sd**2))
    raise ValueError(f"unknown covariate kind {s.kind!r}")


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic corpus settings.

    Assignment and outcome coefficients act on covariates standardized by
    their nominal moments.  Outcomes are NB2 with
    ``log mu = outcome_base[t] + sum(outcome_coef[c] * z_c)``.
    """

    n: int = 5000
    scheme: tuple[str, ...] = ("F1", "F2", "F3")
    covariates: Mapping[str, CovariateSpec] = field(default_factory=lambda: dict(CORPUS_COVARIATES))
    assignment_intercept: tuple[float, ...] = (0.0, 0.0, 0.0)
    assignment: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    outcome_base: tuple[float, ...] = (3.4, 3.4, 3.4)
    outcome_coef: Mapping[str, float] = field(default_factory=dict)
    outcome_dispersion: float = 0.8
    missing: Mapping[str, float] = field(default_factory=dict)
    year: int = 2005
    mode: str = "model"

    @property
    def K(self) -> int:
        return len(self.scheme)

    def validate(self) -> None:
        if self.mode not in ("model", "worked_example"):
            raise ValueError(f"unknown generator mode {self.mode!r}")
        if self.mode == "worked_example":
            return
        K = self.K
        if K < 2:
            raise ValueError("need at least two treatments")
        if len(set(self.scheme)) != K:
            raise ValueError("duplicate treatment names")
        if self.n < K:
            raise ValueError("n must be at least K")
        if len(self.assignment_intercept) != K or len(self.outcome_base) != K:
            raise ValueError("assignment_intercept and outcome_base need one entry per treatment")
        for name, coefs in self.assignment.items():
            if name not in self.covariates:
                raise ValueError(f"assignment references unknown covariate {name!r}")
            if len(coefs) != K:
                raise ValueError(f"assignment coefficients for {name!r} need {K} entries")
        for name in list(self.outcome_coef) + list(self.missing):
            if name not in self.covariates:
                raise ValueError(f"unknown covariate {name!r}")
        for name, rate in self.missing.items():
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"missing rate for {name!r} must lie in [0, 1)")
        for name, s in self.covariates.items():
            if s.kind == "bernoulli" and not 0.0 <= s.p <= 1.0:
                raise ValueError(f"{name}: p outside [0, 1]")
            if s.kind == "binomial_of" and (s.of not in self.covariates or not 0.0 <= s.p <= 1.0):
                raise ValueError(f"{name}: invalid binomial_of spec")
            if s.kind in ("nb", "poisson") and s.mean <= s.offset:
                raise ValueError(f"{name}: mean must exceed offset")
            if s.kind == "nb" and s.shape <= 0:
                raise ValueError(f"{name}: shape must be positive")
            if s.kind == "lognormal" and (s.mean <= 0 or s.sd <= 0):
                raise ValueError(f"{name}: lognormal needs positive mean and sd")
        if not self.outcome_dispersion > 0:
            raise ValueError("outcome_dispersion must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = list(self.scheme)
        d["covariates"] = {k: asdict(v) for k, v in self.covariates.items()}
        d["assignment"] = {k: list(v) for k, v in self.assignment.items()}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneratorConfig":
        d = dict(d)
        preset = d.pop("preset", None)
        base = {"null": null_config, "confounded": confounded_config, "separated": separated_config,
                "worked_example": worked_example_config, None: cls}[preset]()
        if "covariates" in d:
            covs = dict(base.covariates)
            for k, v in d.pop("covariates").items():
                covs[k] = CovariateSpec(**v)
            d["covariates"] = covs
        for key in ("scheme", "assignment_intercept", "outcome_base"):
            if key in d:
                d[key] = tuple(d[key])
        if "assignment" in d:
            d["assignment"] = {k: tuple(v) for k, v in d["assignment"].items()}
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown generator config keys: {sorted(unknown)}")
        return replace(base, **d)


def null_config(n: int = 5000) -> GeneratorConfig:
    """Assignment independent of covariates and equal baselines: every true effect is zero."""
    return GeneratorConfig(
        n=n,
        outcome_coef={"number_of_coauthors": 0.3, "number_of_pages": 0.2, "journal_impact_factor": 0.3},
    )


def _light_jif() -> dict[str, CovariateSpec]:
    covs = dict(CORPUS_COVARIATES)
    covs["journal_impact_factor"] = CovariateSpec("lognormal", mean=2.26, sd=1.2)
    return covs


def confounded_config(n: int = 50_000) -> GeneratorConfig:
    """Three fields that differ in co-authors, pages, JIF and region; region drives most of the citation gap.

    Confounding runs mainly through the bounded region flags, so naive contrasts
    are far off while the inverse weights stay moderate.
    """
    return GeneratorConfig(
        n=n,
        covariates=_light_jif(),
        assignment_intercept=(0.0, 0.0, 0.0),
        assignment={
            "number_of_coauthors": (0.0, 0.25, -0.2),
            "number_of_pages": (0.0, -0.2, 0.2),
            "journal_impact_factor": (0.0, 0.2, -0.2),
            "usa": (0.0, 0.7, -0.7),
            "europe": (0.0, 0.4, -0.4),
        },
        outcome_base=(3.2, 3.3, 3.0),
        outcome_coef={
            "number_of_coauthors": 0.1,
            "number_of_pages": -0.1,
            "journal_impact_factor": 0.05,
            "number_of_cited_references": 0.1,
            "usa": 1.4,
            "europe": 0.8,
        },
        missing={"journal_impact_factor": 0.0008, "number_of_keywords": 0.0021},
    )


def separated_config(n: int = 20_000) -> GeneratorConfig:
    """Four fields with strong class-specific covariate profiles (overlap diagnostic)."""
    return GeneratorConfig(
        n=n,
        covariates=_light_jif(),
        scheme=("F1", "F2", "F3", "F4"),
        assignment_intercept=(0.0, 0.0, 0.0, 0.0),
        assignment={
            "number_of_coauthors": (1.5, -1.0, 0.0, -0.5),
            "number_of_pages": (-1.0, 1.5, -0.5, 0.0),
            "journal_impact_factor": (0.0, -0.5, 1.5, -1.0),
            "number_of_cited_references": (-0.5, 0.0, -1.0, 1.5),
        },
        outcome_base=(3.0, 3.2, 3.4, 3.6),
        outcome_coef={"number_of_coauthors": 0.2},
    )


def worked_example_config() -> GeneratorConfig:
    return GeneratorConfig(n=10, scheme=("F1", "F2"), mode="worked_example", year=2003,
                           assignment_intercept=(0.0, 0.0), outcome_base=(0.0, 0.0))


# Paper id, co-authors, field index, citations
WORKED_EXAMPLE = (
    ("p1", 1, 0, 40), ("p2", 1, 0, 60), ("p3", 1, 0, 40), ("p4", 1, 0, 60), ("p5", 1, 1, 50),
    ("p6", 5, 0, 100), ("p7", 5, 1, 150), ("p8", 5, 1, 50), ("p9", 5, 1, 150), ("p10", 5, 1, 50),
)


@dataclass(frozen=True)
class GroundTruth:
    """Potential outcomes for every unit under every treatment.

    ``ace[s, t]`` is the finite-sample mean of ``Y(s) - Y(t)``; ``ace_expected``
    replaces the draws by their conditional means.
    """

    scheme: tuple[str, ...]
    treatment: np.ndarray
    propensity: np.ndarray
    potential_outcomes: np.ndarray
    conditional_means: np.ndarray
    ace: np.ndarray
    ace_expected: np.ndarray
    naive_means: np.ndarray

    def to_dict(self) -> dict:
        return {
            "scheme": list(self.scheme),
            "ace": self.ace.tolist(),
            "ace_expected": self.ace_expected.tolist(),
            "naive_means": self.naive_means.tolist(),
            "potential_outcome_means": self.potential_outcomes.mean(axis=0).tolist(),
        }


def _pairwise(v: np.ndarray) -> np.ndarray:
    return v[:, None] - v[None, :]


def _ace_from(po: np.ndarray) -> np.ndarray:
    K = po.shape[1]
    return np.array([[np.mean(po[:, s] - po[:, t]) for t in range(K)] for s in range(K)])


def _stream(seed: int, j: int) -> np.random.Generator:
    return philox(seed, j)


def _draw_covariates(cfg: GeneratorConfig, seed: int) -> dict[str, np.ndarray]:
    n = cfg.n
    out: dict[str, np.ndarray] = {}
    order = [c for c in cfg.covariates if cfg.covariates[c].kind != "binomial_of"]
    order += [c for c in cfg.covariates if cfg.covariates[c].kind == "binomial_of"]
    for name in order:
        s = cfg.covariates[name]
        g = _stream(seed, 1 + list(cfg.covariates).index(name))
        if s.kind == "nb":
            m = s.mean - s.offset
            x = s.offset + g.negative_binomial(s.shape, s.shape / (s.shape + m), size=n)
        elif s.kind == "poisson":
            x = s.offset + g.poisson(s.mean - s.offset, size=n)
        elif s.kind == "bernoulli":
            x = (g.random(n) < s.p).astype(np.int64)
        elif s.kind == "lognormal":
            sigma2 = np.log1p((s.sd / s.mean) ** 2)
            x = np.round(g.lognormal(np.log(s.mean) - sigma2 / 2, np.sqrt(sigma2), size=n), s.decimals)
        elif s.kind == "binomial_of":
            x = g.binomial(out[s.of].astype(np.int64), s.p)
        else:
            raise ValueError(f"unknown covariate kind {s.kind!r}")
        if s.max is not None:
            x = np.minimum(x, s.max)
        out[name] = x
    return out


def _standardized(cfg: GeneratorConfig, x: dict[str, np.ndarray], names) -> np.ndarray:
    cols = []
    for name in names:
        m, sd = nominal_moments(name, cfg.covariates)
        cols.append((x[name] - m) / sd)
    return np.column_stack(cols) if cols else np.zeros((cfg.n, 0))


def _worked_example() -> tuple[list[PaperRecord], GroundTruth]:
    records = [PaperRecord(pid, cit, (f"F{t + 1}",), 2003, {"number_of_coauthors": co})
               for pid, co, t, cit in WORKED_EXAMPLE]
    treat = np.array([t for _, _, t, _ in WORKED_EXAMPLE])
    y = np.array([c for *_, c in WORKED_EXAMPLE], dtype=float)
    co = np.array([c for _, c, _, _ in WORKED_EXAMPLE])
    p_f1 = np.where(co == 1, 0.8, 0.2)
    prop = np.column_stack([p_f1, 1 - p_f1])
    # Citations depend on co-authors only, so both potential outcomes equal the realized count.
    po = np.column_stack([y, y])
    naive = np.array([y[treat == t].mean() for t in range(2)])
    truth = GroundTruth(("F1", "F2"), treat, prop, po, po.copy(), _ace_from(po), _ace_from(po), naive)
    return records, truth


def generate(cfg: GeneratorConfig, seed: int) -> tuple[list[PaperRecord], GroundTruth]:
    cfg.validate()
    if cfg.mode == "worked_example":
        return _worked_example()
    n, K = cfg.n, cfg.K
    x = _draw_covariates(cfg, seed)

    a_names = list(cfg.assignment)
    Z = _standardized(cfg, x, a_names)
    A = np.array([cfg.assignment[c] for c in a_names]).reshape(len(a_names), K)
    prop = softmax(np.asarray(cfg.assignment_intercept) + Z @ A, axis=1)
    u_assign = _stream(seed, 101).random(n)
    treat = np.minimum((u_assign[:, None] > np.cumsum(prop, axis=1)).sum(axis=1), K - 1)

    o_names = list(cfg.outcome_coef)
    gamma = np.array([cfg.outcome_coef[c] for c in o_names])
    lin = _standardized(cfg, x, o_names) @ gamma if o_names else np.zeros(n)
    mu = np.exp(np.asarray(cfg.outcome_base)[None, :] + lin[:, None])
    # common random numbers across treatments: shared gamma frailty and uniform
    a = cfg.outcome_dispersion
    frailty = _stream(seed, 102).gamma(1.0 / a, a, size=n)
    u = _stream(seed, 103).random(n)
    u = np.where(u > 0, u, 0.5 / 2**53)
    po = poisson.ppf(u[:, None], mu * frailty[:, None]).astype(np.int64)
    y = po[np.arange(n), treat]

    miss = {}
    for j, (name, rate) in enumerate(sorted(cfg.missing.items())):
        miss[name] = _stream(seed, 200 + j).random(n) < rate

    names = [c for c in COVARIATES if c in x] + [c for c in x if c not in COVARIATES]
    records = []
    width = len(str(n))
    for i in range(n):
        covs = {}
        for c in names:
            v = x[c][i]
            if c in miss and miss[c][i]:
                covs[c] = None
            elif cfg.covariates[c].kind == "lognormal":
                covs[c] = float(v)
            else:
                covs[c] = int(v)
        records.append(PaperRecord(f"s{i + 1:0{width}d}", int(y[i]), (cfg.scheme[treat[i]],), cfg.year, covs))

    naive = np.array([y[treat == t].mean() if np.any(treat == t) else np.nan for t in range(K)])
    truth = GroundTruth(cfg.scheme, treat, prop, po.astype(float), mu, _ace_from(po.astype(float)),
                        _pairwise(mu.mean(axis=0)), naive)
    return records, truth


def write_truth(truth: GroundTruth, cfg: GeneratorConfig, seed: int, path) -> None:
    payload = {
        "generator": "fieldipw.synth",
        "rng": SYNTH_RNG_NAME,
        "seed": seed,
        "config": cfg.to_dict(),
        "truth": truth.to_dict(),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_synthetic(cfg: GeneratorConfig, seed: int, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, truth = generate(cfg, seed)
    corpus_path, truth_path = out_dir / "corpus.csv", out_dir / "truth.json"
    write_corpus(records, corpus_path)
    write_truth(truth, cfg, seed, truth_path)
    return corpus_path, truth_path
