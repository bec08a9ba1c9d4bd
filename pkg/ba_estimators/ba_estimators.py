"""Bland-Altman estimation for repeated measurements.

Unpaired replicates measure a constant true value per subject; paired
replicates measure a changing true value with one measurement per method
and pair. Both designs decompose the variance of single differences into a
between-subject part and a within-subject part, and both expose per-subject
components h = (h1, h2) that average back to the global bias and variance.
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from common import EstimationError
from ba_estimators.config import DEFAULT_VARIANCE_MODE, LOA_Z, VARIANCE_MODES
from ba_estimators.utils import column, within_components

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubjectSummary:
    subject_id: str
    mean_diff: float
    m_a: int
    m_b: int
    rss_a: float = 0.0
    rss_b: float = 0.0
    rss_diff: float = 0.0

    @property
    def df_a(self):
        return self.m_a - 1

    @property
    def df_b(self):
        return self.m_b - 1

    @property
    def m(self):
        # paired design: m_a == m_b
        return self.m_a

    @property
    def df(self):
        return self.m_a - 1


@dataclass(frozen=True)
class BAEstimate:
    bias: float
    var_between: float
    var_total: float
    loa_lower: float
    loa_upper: float
    n_subjects: int
    clamped: bool = False
    var_within_a: float | None = None
    var_within_b: float | None = None
    var_within: float | None = None
    var_total_raw: float | None = None

    @property
    def loa(self):
        return (self.loa_lower, self.loa_upper)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TransformedOutcome:
    """Per-subject influence values fed to the tree.

    ``constants`` holds the full-sample quantities frozen inside h.
    """
    subject_ids: tuple
    h1: np.ndarray
    h2: np.ndarray
    constants: dict = field(default_factory=dict)

    def matrix(self, outcome="ba"):
        if outcome == "mean_only":
            return self.h1.reshape(-1, 1)
        return np.column_stack([self.h1, self.h2])


def subject_summaries(dataset):
    summaries = []
    for s in dataset.subjects:
        a = np.asarray(s.measurements_a, dtype=float)
        b = np.asarray(s.measurements_b, dtype=float)
        if dataset.design == "paired":
            y = a - b
            ybar = y.mean()
            summaries.append(SubjectSummary(
                subject_id=s.subject_id, mean_diff=float(ybar), m_a=len(y), m_b=len(y),
                rss_diff=float(((y - ybar) ** 2).sum()),
            ))
        else:
            summaries.append(SubjectSummary(
                subject_id=s.subject_id, mean_diff=float(a.mean() - b.mean()), m_a=len(a), m_b=len(b),
                rss_a=float(((a - a.mean()) ** 2).sum()), rss_b=float(((b - b.mean()) ** 2).sum()),
            ))
    return summaries


def limits_of_agreement(bias, var_total):
    if var_total < 0:
        raise ValueError(f"variance must be non-negative, got {var_total}")
    half_width = LOA_Z * np.sqrt(var_total)
    return float(bias - half_width), float(bias + half_width)


def _require_subjects(summaries):
    n = len(summaries)
    if n < 2:
        raise EstimationError(f"at least 2 subjects are required, got {n}")
    return n


def _unpaired_parts(summaries):
    n = _require_subjects(summaries)
    ybar_i = column(summaries, "mean_diff")
    m_a, m_b = column(summaries, "m_a"), column(summaries, "m_b")
    comp_a, var_a = within_components(column(summaries, "rss_a"), m_a - 1)
    comp_b, var_b = within_components(column(summaries, "rss_b"), m_b - 1)
    for method, comp in (("A", comp_a), ("B", comp_b)):
        if comp is None:
            raise EstimationError(f"within-subject variance for method {method} not identifiable")
    return {
        "n": n, "ybar_i": ybar_i, "ybar": ybar_i.mean(),
        "comp_a": comp_a, "comp_b": comp_b, "var_a": var_a, "var_b": var_b,
        "c_a": 1.0 - np.mean(1.0 / m_a), "c_b": 1.0 - np.mean(1.0 / m_b),
    }


def estimate_unpaired(summaries):
    p = _unpaired_parts(summaries)
    var_between = float(((p["ybar_i"] - p["ybar"]) ** 2).sum() / (p["n"] - 1))
    var_total = var_between + p["c_a"] * p["var_a"] + p["c_b"] * p["var_b"]
    lower, upper = limits_of_agreement(p["ybar"], var_total)
    return BAEstimate(
        bias=float(p["ybar"]), var_between=var_between, var_total=float(var_total),
        loa_lower=lower, loa_upper=upper, n_subjects=p["n"],
        var_within_a=float(p["var_a"]), var_within_b=float(p["var_b"]), var_total_raw=float(var_total),
    )


def transform_unpaired(summaries):
    p = _unpaired_parts(summaries)
    n = p["n"]
    between_i = n / (n - 1) * (p["ybar_i"] - p["ybar"]) ** 2
    h2 = between_i + p["c_a"] * p["comp_a"] + p["c_b"] * p["comp_b"]
    constants = {"n": n, "ybar": float(p["ybar"]), "c_a": float(p["c_a"]), "c_b": float(p["c_b"])}
    return TransformedOutcome(tuple(s.subject_id for s in summaries), p["ybar_i"].copy(), h2, constants)


def _check_mode(variance_mode):
    if variance_mode not in VARIANCE_MODES:
        raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}, got '{variance_mode}'")


def _paired_parts(summaries, variance_mode):
    _check_mode(variance_mode)
    n = _require_subjects(summaries)
    ybar_i = column(summaries, "mean_diff")
    m = column(summaries, "m_a")
    total = m.sum()
    comp_w, var_w = within_components(column(summaries, "rss_diff"), m - 1)
    if comp_w is None:
        raise EstimationError("within-subject variance of paired differences not identifiable")
    m0 = (total ** 2 - (m ** 2).sum()) / ((n - 1) * total)
    if m0 <= 0:
        raise EstimationError("replicate-count divisor m0 is zero")
    ybar = (m * ybar_i).sum() / total
    # per-subject between components; their mean is the between mean square
    weights = m if variance_mode == "msb" else np.ones_like(m)
    between_i = n * weights / (n - 1) * (ybar_i - ybar) ** 2
    return {
        "n": n, "m": m, "total": total, "ybar_i": ybar_i, "ybar": ybar,
        "comp_w": comp_w, "var_w": var_w, "m0": m0, "between_i": between_i,
    }


def estimate_paired(summaries, variance_mode=DEFAULT_VARIANCE_MODE):
    p = _paired_parts(summaries, variance_mode)
    between = float(p["between_i"].mean())
    raw = (between - p["var_w"]) / p["m0"] + p["var_w"]
    clamped = raw < 0
    if clamped:
        logger.info("negative paired variance %.6g clamped to 0 (n=%d)", raw, p["n"])
    var_total = max(float(raw), 0.0)
    lower, upper = limits_of_agreement(p["ybar"], var_total)
    return BAEstimate(
        bias=float(p["ybar"]), var_between=between, var_total=var_total,
        loa_lower=lower, loa_upper=upper, n_subjects=p["n"], clamped=bool(clamped),
        var_within=float(p["var_w"]), var_total_raw=float(raw),
    )


def transform_paired(summaries, variance_mode=DEFAULT_VARIANCE_MODE):
    p = _paired_parts(summaries, variance_mode)
    h1 = p["n"] * p["m"] * p["ybar_i"] / p["total"]
    h2 = (p["between_i"] - p["comp_w"]) / p["m0"] + p["comp_w"]
    constants = {
        "n": p["n"], "ybar": float(p["ybar"]), "sum_m": float(p["total"]),
        "m0": float(p["m0"]), "variance_mode": variance_mode,
    }
    return TransformedOutcome(tuple(s.subject_id for s in summaries), h1, h2, constants)


def mean_outcome(summaries, design):
    """h1 alone, which needs no within-subject replication."""
    n = _require_subjects(summaries)
    ybar_i = column(summaries, "mean_diff")
    if design != "paired":
        return ybar_i.copy()
    m = column(summaries, "m_a")
    return n * m * ybar_i / m.sum()


def estimate(summaries, design, variance_mode=DEFAULT_VARIANCE_MODE):
    if design == "paired":
        return estimate_paired(summaries, variance_mode)
    return estimate_unpaired(summaries)


def transform(summaries, design, variance_mode=DEFAULT_VARIANCE_MODE):
    if design == "paired":
        return transform_paired(summaries, variance_mode)
    return transform_unpaired(summaries)


def estimate_dataset(dataset, variance_mode=DEFAULT_VARIANCE_MODE):
    return estimate(subject_summaries(dataset), dataset.design, variance_mode)
