"""Command-line pipeline: ``fieldipw run|effects|balance|plot-overlap|synth``.

Configuration is a nested JSON object; see ``PipelineConfig``.  Every artifact
starts with a line recording the configuration hash and seed, and contains no
timestamps, so reruns with the same configuration are byte-identical.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from .balance import BalanceReport, balance_checks, combine_checks
from .dataset import (
    ImputedCorpus,
    aggregate_to_scheme,
    impute_missing,
    load_corpus,
    load_mapping,
    load_scheme,
    resolve_multilabel,
    single_category_only,
)
from .design import build_design
from .errors import DataError, NumericalError
from .estimator import IpwEstimates, ipw_estimates, ipw_weights
from .glm import DEFAULT_MAX_ITER, DEFAULT_RIDGE, DEFAULT_TOL, FAMILIES
from .plot import overlap_svg
from .propensity import (
    CLIP_HI,
    CLIP_LO,
    PropensityMatrix,
    clip_scores,
    estimate_propensities,
    overlap_summary,
    read_overlap_csv,
    write_overlap_csv,
)
from .report import ace_csv, balance_csv, balance_markdown, effects_csv, effects_markdown, num
from .rng import LABEL_RNG_NAME, SYNTH_RNG_NAME
from .synth import GeneratorConfig, write_synthetic

log = logging.getLogger("fieldipw")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

STAGES = ("effects_before", "balance_before", "propensity", "overlap", "balance_after", "effects_after")


@dataclass
class ModelConfig:
    ridge: float = DEFAULT_RIDGE
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    interactions: Any = "mains"


@dataclass
class ClipConfig:
    lo: float = CLIP_LO
    hi: float = CLIP_HI


@dataclass
class BalanceConfig:
    families: dict[str, str] = field(default_factory=dict)
    covariates: list[str] | None = None
    ridge: float = DEFAULT_RIDGE
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER


@dataclass
class PipelineConfig:
    """Analysis configuration.

    ``scheme`` is either a list of category codes or the path of a file with
    one code per line.  ``aggregate`` is an optional two-column CSV mapping
    fine categories to coarse ones; without an explicit scheme its keys are
    used.  ``columns`` maps logical field names to CSV header names.
    Relative paths are resolved against ``base_dir``.
    """

    input: str
    scheme: list[str] | str | None = None
    aggregate: str | None = None
    columns: dict[str, str] = field(default_factory=dict)
    delimiter: str = ";"
    seed: int = 0
    out: str = "out"
    single_category_only: bool = False
    model: ModelConfig = field(default_factory=ModelConfig)
    clip: ClipConfig = field(default_factory=ClipConfig)
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".") -> "PipelineConfig":
        d = dict(d)
        nested = {"model": ModelConfig, "clip": ClipConfig, "balance": BalanceConfig}
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        if "input" not in d:
            raise DataError("config needs an 'input' path")
        for key, kind in nested.items():
            sub = d.get(key) or {}
            bad = set(sub) - {f.name for f in fields(kind)}
            if bad:
                raise DataError(f"unknown keys in '{key}': {sorted(bad)}")
            d[key] = kind(**sub)
        cfg = cls(**d, base_dir=str(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise DataError(f"{path}: config must be a JSON object")
        return cls.from_dict(d, path.resolve().parent)

    def validate(self) -> None:
        if not 0 < self.clip.lo < self.clip.hi < 1:
            raise DataError(f"clip bounds must satisfy 0 < lo < hi < 1, got ({self.clip.lo}, {self.clip.hi})")
        if not 0 <= self.seed < 2**64:
            raise DataError("seed must be an unsigned 64-bit integer")
        for name, fam in self.balance.families.items():
            if fam not in FAMILIES:
                raise DataError(f"unknown family {fam!r} for {name!r}")
        if self.model.ridge < 0 or self.balance.ridge < 0:
            raise DataError("ridge must be non-negative")

    def path(self, p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def echo(self) -> dict:
        """Configuration as given, without the output directory or base path."""
        d = asdict(self)
        d.pop("out")
        d.pop("base_dir")
        return d


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def config_hash(cfg: PipelineConfig) -> str:
    """Hash of the configuration echo plus the bytes of every referenced file."""
    files = {"input": _sha256(cfg.path(cfg.input))}
    if isinstance(cfg.scheme, str):
        files["scheme"] = _sha256(cfg.path(cfg.scheme))
    if cfg.aggregate:
        files["aggregate"] = _sha256(cfg.path(cfg.aggregate))
    blob = json.dumps({"config": cfg.echo(), "files": files}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _check_paths(cfg: PipelineConfig) -> None:
    refs = [("input", cfg.input)]
    if isinstance(cfg.scheme, str):
        refs.append(("scheme", cfg.scheme))
    if cfg.aggregate:
        refs.append(("aggregate", cfg.aggregate))
    for what, p in refs:
        if not cfg.path(p).is_file():
            raise DataError(f"{what} file not found: {cfg.path(p)}")


def prepare_corpus(cfg: PipelineConfig) -> ImputedCorpus:
    records = load_corpus(cfg.path(cfg.input), cfg.columns, cfg.delimiter)
    if cfg.single_category_only:
        n = len(records)
        records = single_category_only(records)
        log.info("single-category filter kept %d of %d records", len(records), n)
    mapping = load_mapping(cfg.path(cfg.aggregate)) if cfg.aggregate else None
    if isinstance(cfg.scheme, str):
        scheme = load_scheme(cfg.path(cfg.scheme))
    elif cfg.scheme is not None:
        scheme = list(cfg.scheme)
    elif mapping is not None:
        scheme = list(mapping)
    else:
        raise DataError("config needs a 'scheme' or an 'aggregate' mapping")
    corpus = resolve_multilabel(records, scheme, cfg.seed)
    if corpus.dropped:
        log.warning("dropped %d records with no category in the scheme", corpus.dropped)
    if mapping is not None:
        corpus = aggregate_to_scheme(corpus, mapping)
    counts = np.bincount(corpus.labels, minlength=corpus.K)
    empty = [c for c, n in zip(corpus.scheme, counts) if n == 0]
    if empty:
        raise DataError(f"no records assigned to categories: {', '.join(empty)}")
    return impute_missing(corpus)


def propensities_csv(corpus: ImputedCorpus, P: PropensityMatrix, comment: str) -> str:
    own = P.own(corpus.labels)
    rows = [",".join(("id", "label", *(f"p[{c}]" for c in corpus.scheme), "own", "weight", "clipped"))]
    for i, rec in enumerate(corpus.corpus.records):
        rows.append(",".join((rec.id, corpus.scheme[corpus.labels[i]], *(num(v) for v in P.values[i]),
                              num(own[i]), num(1.0 / own[i]), str(int(P.clipped[i].any())))))
    return f"# {comment}\n" + "\n".join(rows) + "\n"


class Pipeline:
    """Runs the analysis stages in order and records what was written."""

    def __init__(self, cfg: PipelineConfig, out: Path, command: str):
        self.cfg, self.out, self.command = cfg, out, command
        self.status = {}
        self.outputs = []
        self.corpus = None
        self.hash = None
        self.est_before: IpwEstimates | None = None
        self.bal_before = None
        self.P = None

    @property
    def comment(self) -> str:
        return f"fieldipw config_sha256={self.hash} seed={self.cfg.seed}"

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text, encoding="utf-8")
        self.outputs.append(name)

    def _effects_before(self):
        c = self.corpus
        self.est_before = ipw_estimates(c.citations, np.ones(c.N), c.labels, c.K, c.scheme)

    def _balance_before(self):
        b = self.cfg.balance
        self.bal_before = balance_checks(self.corpus, None, b.families, b.covariates, b.ridge, b.tol, b.max_iter)

    def _propensity(self):
        m, c = self.cfg.model, self.corpus
        _, self.design = build_design(c, m.interactions)
        raw = estimate_propensities(self.design, c.labels, c.K, m.ridge, m.tol, m.max_iter)
        self.P = clip_scores(raw, self.cfg.clip.lo, self.cfg.clip.hi)
        n_clip = int(self.P.clipped.any(axis=1).sum())
        if n_clip:
            log.info("clipped scores in %d of %d rows", n_clip, c.N)
        self.write("propensities.csv", propensities_csv(c, self.P, self.comment))

    def _overlap(self):
        summary = overlap_summary(self.P, self.corpus.labels, self.corpus.scheme)
        write_overlap_csv(summary, self.out / "overlap.csv", self.comment)
        self.outputs.append("overlap.csv")
        self.write("overlap.svg", overlap_svg(summary, self.comment))

    def _balance_after(self):
        b = self.cfg.balance
        after = balance_checks(self.corpus, self.P, b.families, b.covariates, b.ridge, b.tol, b.max_iter)
        rep: BalanceReport = combine_checks(self.corpus, self.bal_before, after, self.design.values.shape[1])
        self.write("balance.csv", balance_csv(rep, self.comment))
        self.write("balance.md", balance_markdown(rep, self.comment))

    def _effects_after(self):
        c = self.corpus
        w = ipw_weights(self.P, c.labels)
        est = ipw_estimates(c.citations, w.weights, c.labels, c.K, c.scheme)
        self.write("effects.csv", effects_csv(est, self.comment))
        self.write("ace.csv", ace_csv(est, self.comment))
        self.write("effects.md", effects_markdown(est, self.comment))

    def run(self, stages=STAGES) -> int:
        self.out.mkdir(parents=True, exist_ok=True)
        code = EXIT_OK
        try:
            _check_paths(self.cfg)
            self.hash = config_hash(self.cfg)
            self.corpus = prepare_corpus(self.cfg)
            for stage in stages:
                log.info("stage %s", stage)
                self.status[stage] = "failed"
                getattr(self, f"_{stage}")()
                self.status[stage] = "ok"
        except NumericalError as exc:
            log.error("numerical failure: %s", exc)
            code = EXIT_NUMERICAL
        except (DataError, ValueError, FileNotFoundError, KeyError) as exc:
            log.error("data error: %s", exc)
            code = EXIT_DATA
        for stage in stages:
            self.status.setdefault(stage, "skipped")
        self.write_metadata(code)
        return code

    def write_metadata(self, code: int) -> None:
        c = self.corpus
        meta = {
            "tool": "fieldipw",
            "command": self.command,
            "config_sha256": self.hash,
            "seed": self.cfg.seed,
            "rng": {"labels": LABEL_RNG_NAME, "synth": SYNTH_RNG_NAME},
            "versions": {"fieldipw": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "config": self.cfg.echo(),
            "records": None if c is None else {"used": c.N, "dropped": c.corpus.dropped},
            "stages": [{"name": k, "status": v} for k, v in self.status.items()],
            "outputs": sorted(self.outputs),
            "exit_code": code,
            "partial": code != EXIT_OK,
        }
        (self.out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON pipeline configuration")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--single-category-only", action="store_true",
                   help="keep only papers listed in exactly one category")
    p.add_argument("--scheme", help="file with one category code per line")
    p.add_argument("--aggregate", help="category-to-supercategory mapping CSV")
    p.add_argument("--input", help="override the configured corpus path")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fieldipw", description="Field-normalized citation effects by inverse probability weighting.")
    parser.add_argument("--version", action="version", version=f"fieldipw {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("run", "full six-stage analysis"),
                        ("effects", "propensities and weighted effects only"),
                        ("balance", "propensities and balance checks only")):
        _pipeline_args(sub.add_parser(name, help=help_, parents=[common]))
    p = sub.add_parser("plot-overlap", help="SVG boxplots from an overlap CSV", parents=[common])
    p.add_argument("overlap_csv")
    p.add_argument("out_svg", nargs="?", help="default: overlap.svg beside the input")
    p = sub.add_parser("synth", help="write a synthetic corpus and its ground truth", parents=[common])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON generator configuration")
    src.add_argument("--preset", choices=("null", "confounded", "separated", "worked_example"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _pipeline_config(args) -> tuple[PipelineConfig, Path]:
    cfg = PipelineConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.single_category_only:
        cfg.single_category_only = True
    cwd = str(Path.cwd())
    if args.input:
        cfg.input = str(Path(cwd, args.input))
    if args.scheme:
        cfg.scheme = str(Path(cwd, args.scheme))
    if args.aggregate:
        cfg.aggregate = str(Path(cwd, args.aggregate))
    cfg.validate()
    out = Path(args.out) if args.out else cfg.path(cfg.out)
    return cfg, out


def _cmd_pipeline(args) -> int:
    cfg, out = _pipeline_config(args)
    stages = {
        "run": STAGES,
        "effects": ("effects_before", "propensity", "effects_after"),
        "balance": ("balance_before", "propensity", "balance_after"),
    }[args.command]
    return Pipeline(cfg, out, args.command).run(stages)


def _cmd_plot(args) -> int:
    src = Path(args.overlap_csv)
    summary, comments = read_overlap_csv(src)
    dest = Path(args.out_svg) if args.out_svg else src.with_name("overlap.svg")
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(overlap_svg(summary, comments[0] if comments else None), encoding="utf-8")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.preset:
        cfg = GeneratorConfig.from_dict({"preset": args.preset})
    else:
        try:
            cfg = GeneratorConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.config}: invalid JSON ({exc})") from None
    corpus, truth = write_synthetic(cfg, args.seed, args.out)
    log.info("wrote %s and %s", corpus, truth)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"plot-overlap": _cmd_plot, "synth": _cmd_synth}.get(args.command, _cmd_pipeline)
    try:
        return handler(args)
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (DataError, ValueError, FileNotFoundError, KeyError, TypeError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
