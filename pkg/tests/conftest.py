import functools
import os

import hypothesis
import numpy as np

from fieldipw.analysis import analyze
from fieldipw.synth import confounded_config, generate, null_config

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


CONFOUNDED_SEED = 7
NULL_SEED = 5

ACCEPTANCE_LINES: list[str] = []


@functools.cache
def confounded_analysis():
    cfg = confounded_config()
    records, truth = generate(cfg, CONFOUNDED_SEED)
    return cfg, records, truth, analyze(records, cfg.scheme)


@functools.cache
def null_analysis():
    cfg = null_config(50_000)
    records, truth = generate(cfg, NULL_SEED)
    return cfg, records, truth, analyze(records, cfg.scheme)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
