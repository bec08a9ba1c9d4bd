import numpy as np
from sklearn.metrics import adjusted_rand_score
from statsmodels.stats.proportion import proportion_confint

from evaluation_harness.config import CI_LEVEL


def adjusted_rand_index(labels_a, labels_b):
    """Hubert-Arabie adjusted Rand index of two labelings of the same subjects.

    Two single-group labelings count as identical (1.0).
    """
    labels_a, labels_b = list(labels_a), list(labels_b)
    if len(labels_a) != len(labels_b):
        raise ValueError(f"label vectors differ in length: {len(labels_a)} vs {len(labels_b)}")
    if len(labels_a) < 2:
        raise ValueError("at least two labels are required")
    return float(adjusted_rand_score(labels_a, labels_b))


def rate_interval(count, nobs, level=CI_LEVEL):
    """Clopper-Pearson interval for count/nobs."""
    if nobs == 0:
        return float("nan"), float("nan")
    lo, hi = proportion_confint(count, nobs, alpha=1 - level, method="beta")
    lo = 0.0 if count == 0 or np.isnan(lo) else float(lo)
    hi = 1.0 if count == nobs or np.isnan(hi) else float(hi)
    return lo, hi


def mean_and_se(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    se = values.std(ddof=1) / np.sqrt(values.size) if values.size > 1 else 0.0
    return float(values.mean()), float(se)
