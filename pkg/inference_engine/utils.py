import numpy as np
from scipy.special import gammaincc

from inference_engine.config import SPECTRAL_TOL


def chisq_upper_tail(x, df):
    """P(X > x) for X ~ chi-square(df), i.e. Q(df/2, x/2)."""
    if not np.isfinite(x):
        raise ValueError(f"statistic must be finite, got {x}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def adjust_bonferroni(p_values, n_tests):
    if n_tests < 1:
        raise ValueError(f"n_tests must be >= 1, got {n_tests}")
    return [min(1.0, p * n_tests) for p in p_values]


def spectral_decomposition(matrix, tol=SPECTRAL_TOL):
    """Eigenpairs of a symmetric PSD matrix above the relative tolerance."""
    matrix = np.atleast_2d(matrix)
    values, vectors = np.linalg.eigh((matrix + matrix.T) / 2.0)
    largest = values.max() if values.size else 0.0
    if largest <= 0:
        return values[:0], vectors[:, :0]
    keep = values > tol * largest
    return values[keep], vectors[:, keep]


def pseudo_quadratic(d, values, vectors):
    """d' S^+ d restricted to the retained eigenspace; d may be (k,) or (m, k)."""
    projected = np.atleast_2d(d) @ vectors
    return ((projected ** 2) / values).sum(axis=1)
