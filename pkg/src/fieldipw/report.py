"""CSV and Markdown renderings of effect and balance results."""

from __future__ import annotations

import csv
import io

import numpy as np

from .balance import BalanceReport
from .dataset import LABELS
from .estimator import IpwEstimates, ace_matrix


def num(v: float) -> str:
    """Machine format: 10 significant digits, stable under last-bit noise."""
    v = float(v)
    if np.isnan(v):
        return "nan"
    out = f"{v:.10g}"
    return "0" if out == "-0" else out


def _csv(rows, comment: str | None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _f2(v: float) -> str:
    out = f"{v:.2f}"
    return "0.00" if out == "-0.00" else out


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def effects_csv(est: IpwEstimates, comment: str | None = None) -> str:
    rows = [("category", "n", "mean_before", "sd_before", "mean_after", "sd_after", "ess")]
    for t, cat in enumerate(est.scheme):
        rows.append((cat, str(est.n[t]), num(est.mean[t]), num(est.sd[t]), num(est.weighted_mean[t]),
                     num(est.weighted_sd[t]), num(est.ess[t])))
    return _csv(rows, comment)


def ace_csv(est: IpwEstimates, comment: str | None = None) -> str:
    rows = [("estimate", "category", *est.scheme)]
    for label, weighted in (("naive", False), ("ipw", True)):
        A = ace_matrix(est, weighted)
        for s, cat in enumerate(est.scheme):
            rows.append((label, cat, *(num(v) for v in A[s])))
    return _csv(rows, comment)


def effects_markdown(est: IpwEstimates, comment: str | None = None, title: str = "Effects before and after IPW") -> str:
    out = [f"<!-- {comment} -->\n" if comment else "", f"## {title}\n\n"]
    rows = [(cat, f"{est.n[t]:,}", _f2(est.mean[t]), _f2(est.sd[t]), _f2(est.weighted_mean[t]),
             _f2(est.weighted_sd[t])) for t, cat in enumerate(est.scheme)]
    out.append(_md_table(("Category", "Number of papers", "Before IPW: Mean", "Before IPW: SD",
                          "After IPW: Mean", "After IPW: SD"), rows))
    out.append("\nNote. The weighted standard deviation divides by the sum of weights.\n")
    for label, weighted in (("Mean differences before IPW (row minus column)", False),
                            ("Average causal effects after IPW (row minus column)", True)):
        A = ace_matrix(est, weighted)
        out.append(f"\n### {label}\n\n")
        out.append(_md_table(("", *est.scheme), [(cat, *(_f2(v) for v in A[s])) for s, cat in enumerate(est.scheme)]))
    return "".join(out)


def _means_fmt(values, family: str) -> list[str]:
    if family == "logit":
        return [f"{v:.2f}".replace("0.", ".", 1) if 0 <= v < 1 else f"{v:.2f}" for v in values]
    return [f"{v:.1f}" for v in values]


def balance_csv(rep: BalanceReport, comment: str | None = None) -> str:
    rows = [("variable", "family", "propensity_score", "F", "df_num", "df_den", "reduction_pct",
             *(f"mean[{c}]" for c in rep.scheme))]
    for r in rep.rows:
        rows.append((r.covariate, r.family, "No", num(r.F_before), str(r.df_num), str(r.df_den_before), "",
                     *(num(v) for v in r.unadjusted_means)))
        rows.append((r.covariate, r.family, "Yes", num(r.F_after), str(r.df_num), str(r.df_den_after),
                     num(r.reduction_pct), *(num(v) for v in r.adjusted_means_after)))
    return _csv(rows, comment)


def balance_markdown(rep: BalanceReport, comment: str | None = None) -> str:
    q = rep.rows[0].df_num if rep.rows else len(rep.scheme) - 1
    df = rep.rows[0].df_den_before if rep.rows else rep.N
    out = [f"<!-- {comment} -->\n" if comment else "", "## Propensity score check of covariates\n\n"]
    rows = []
    for r in rep.rows:
        label = LABELS.get(r.covariate, r.covariate)
        rows.append((label, "No", f"{r.F_before:,.1f}", *_means_fmt(r.unadjusted_means, r.family)))
        rows.append(("", "Yes", f"{r.F_after:,.1f}", *_means_fmt(r.adjusted_means_after, r.family)))
    out.append(_md_table(("Variable", "Propensity score?", f"F-Test (F({q}, {df}))", *rep.scheme), rows))
    out.append(f"\nN = {rep.N:,}. F is the Wald test of the {q} category dummies divided by {q}; "
               "\"Yes\" rows add the propensity scores as covariates and report means standardized over the sample.\n")
    return "".join(out)
