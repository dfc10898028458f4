"""Inverse-probability-weighted comparison of citation impact across fields."""

__version__ = "0.1.0"

from .balance import BalanceReport, balance_check, balance_report  # noqa: E402
from .dataset import PaperRecord, impute_missing, load_corpus, resolve_multilabel  # noqa: E402
from .design import build_design  # noqa: E402
from .errors import ConvergenceError, DataError, NumericalError, SingularInformationError  # noqa: E402
from .estimator import ace_matrix, ipw_estimates, ipw_weights, stratified_ace  # noqa: E402
from .glm import fit_glm, fit_multinomial, joint_test, predict_proba  # noqa: E402
from .propensity import clip_scores, estimate_propensities, overlap_summary  # noqa: E402

__all__ = [
    "BalanceReport", "ConvergenceError", "DataError", "NumericalError", "PaperRecord",
    "SingularInformationError", "ace_matrix", "balance_check", "balance_report", "build_design",
    "clip_scores", "estimate_propensities", "fit_glm", "fit_multinomial", "impute_missing",
    "ipw_estimates", "ipw_weights", "joint_test", "load_corpus", "overlap_summary", "predict_proba",
    "resolve_multilabel", "stratified_ace",
]
