"""Conditional inference machinery.

Linear statistics t = vec(sum_i w_i g(x_i) h_i') are tested against their
permutation-null moments with a quadratic form whose null distribution is
approximated by chi-square(rank). Weights are 0/1 node memberships.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from common import DegenerateError, UntestableError
from inference_engine.config import SPECTRAL_TOL
from inference_engine.utils import chisq_upper_tail, pseudo_quadratic, spectral_decomposition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CovariateTransform:
    kind: str  # numeric_identity | indicator_set
    levels: tuple = ()

    @classmethod
    def for_covariate(cls, spec):
        if spec.kind in ("numeric", "ordinal"):
            return cls("numeric_identity")
        return cls("indicator_set", tuple(spec.levels))

    def encode(self, values):
        """n x p design: the value itself, or dummies for all but the first level."""
        if self.kind == "numeric_identity":
            return np.asarray(values, dtype=float).reshape(-1, 1)
        values = np.asarray(values, dtype=object)
        columns = [(values == level).astype(float) for level in self.levels[1:]]
        if not columns:
            return np.zeros((len(values), 1))
        return np.column_stack(columns)


@dataclass(frozen=True, eq=False)
class LinearStatistic:
    t: np.ndarray
    mu: np.ndarray | None = None
    sigma: np.ndarray | None = None
    rank: int = 0
    case_weight_sum: float = 0.0


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    df: int
    p_value: float
    p_adjusted: float | None = None

    def to_dict(self):
        return {"statistic": self.statistic, "df": self.df, "p_value": self.p_value, "p_adjusted": self.p_adjusted}


@dataclass(frozen=True)
class Split:
    kind: str  # cutpoint | levels
    statistic: float
    cutpoint: float | None = None
    left_levels: tuple = ()
    n_left: int = 0
    n_right: int = 0


def _as_2d(values):
    values = np.asarray(values, dtype=float)
    return values.reshape(-1, 1) if values.ndim == 1 else values


def _check_dims(g, h, weights):
    if g.shape[0] != h.shape[0] or g.shape[0] != weights.shape[0]:
        raise ValueError(f"dimension mismatch: g {g.shape}, h {h.shape}, weights {weights.shape}")


def linear_statistic(g_values, h_values, weights=None):
    g, h = _as_2d(g_values), _as_2d(h_values)
    weights = np.ones(g.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    _check_dims(g, h, weights)
    # column-stacked vec(G' W H), i.e. sum_i w_i (h_i kron g_i)
    t = (g.T @ (weights[:, None] * h)).ravel(order="F")
    return LinearStatistic(t=t, case_weight_sum=float(weights.sum()))


def conditional_moments(g_values, h_values, weights=None, tol=SPECTRAL_TOL):
    g, h = _as_2d(g_values), _as_2d(h_values)
    weights = np.ones(g.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    _check_dims(g, h, weights)
    w = weights.sum()
    if w < 2:
        raise DegenerateError(f"case weight sum {w} < 2")

    t = (g.T @ (weights[:, None] * h)).ravel(order="F")
    e_h = (weights[:, None] * h).sum(axis=0) / w
    centered = h - e_h
    v_h = (weights[:, None] * centered).T @ centered / w
    sum_g = (weights[:, None] * g).sum(axis=0)
    sum_gg = (weights[:, None] * g).T @ g

    mu = np.kron(e_h, sum_g)
    sigma = (w / (w - 1)) * np.kron(v_h, sum_gg) - (1 / (w - 1)) * np.kron(v_h, np.outer(sum_g, sum_g))
    values, _ = spectral_decomposition(sigma, tol)
    return LinearStatistic(t=t, mu=mu, sigma=sigma, rank=int(values.size), case_weight_sum=float(w))


def quadratic_test(ls, tol=SPECTRAL_TOL):
    if ls.rank == 0 or ls.sigma is None:
        raise UntestableError("covariance of the linear statistic has rank 0")
    values, vectors = spectral_decomposition(ls.sigma, tol)
    statistic = max(float(pseudo_quadratic(ls.t - ls.mu, values, vectors)[0]), 0.0)
    df = int(values.size)
    return TestResult(statistic=statistic, df=df, p_value=chisq_upper_tail(statistic, df))


def node_test(g_values, h_values, weights=None):
    """Moments plus quadratic test in one call."""
    return quadratic_test(conditional_moments(g_values, h_values, weights))


def _two_sample_statistics(h, sums, n_left, tol=SPECTRAL_TOL):
    """Quadratic statistic of g = indicator(left) for each candidate mask.

    For a 0/1 regressor the covariance reduces to V_h * n_L (w - n_L) / (w - 1),
    so one eigendecomposition of V_h serves every candidate.
    """
    w = h.shape[0]
    e_h = h.mean(axis=0)
    v_h = (h - e_h).T @ (h - e_h) / w
    values, vectors = spectral_decomposition(v_h, tol)
    if values.size == 0:
        return None
    n_left = np.asarray(n_left, dtype=float)
    d = sums - n_left[:, None] * e_h
    scale = (w - 1) / (n_left * (w - n_left))
    return pseudo_quadratic(d, values, vectors) * scale


def _best_cutpoint(x, h, minsize):
    order = np.argsort(x, kind="mergesort")
    x_sorted = x[order]
    unique = np.unique(x_sorted)
    if unique.size < 2:
        return None
    n = x.size
    n_left = np.searchsorted(x_sorted, unique[:-1], side="right")
    feasible = (n_left >= minsize) & (n - n_left >= minsize)
    if not feasible.any():
        return None
    cut_index = np.flatnonzero(feasible)
    cumulative = np.cumsum(h[order], axis=0)
    stats = _two_sample_statistics(h, cumulative[n_left[cut_index] - 1], n_left[cut_index])
    if stats is None:
        return None
    best = int(np.argmax(stats))
    j = cut_index[best]
    return Split(
        kind="cutpoint", statistic=float(stats[best]),
        cutpoint=float((unique[j] + unique[j + 1]) / 2.0),
        n_left=int(n_left[j]), n_right=int(n - n_left[j]),
    )


def _best_level_set(x, h, minsize, levels):
    observed = [level for level in levels if np.any(x == level)]
    if len(observed) < 2:
        return None
    rest = observed[1:]
    candidates = []
    for size in range(0, len(rest)):
        for combo in itertools.combinations(range(len(rest)), size):
            candidates.append((0,) + tuple(i + 1 for i in combo))
    candidates.sort()
    left_sets = [tuple(observed[i] for i in idx) for idx in candidates]
    masks = np.array([[value in left for value in x] for left in left_sets])
    n_left = masks.sum(axis=1)
    feasible = (n_left >= minsize) & (x.size - n_left >= minsize)
    if not feasible.any():
        return None
    masks, n_left = masks[feasible], n_left[feasible]
    left_sets = [left for left, ok in zip(left_sets, feasible) if ok]
    stats = _two_sample_statistics(h, masks.astype(float) @ h, n_left)
    if stats is None:
        return None
    best = int(np.argmax(stats))
    logger.debug("level-set search over %d partitions, best %s", len(left_sets), left_sets[best])
    return Split(
        kind="levels", statistic=float(stats[best]), left_levels=left_sets[best],
        n_left=int(n_left[best]), n_right=int(x.size - n_left[best]),
    )


def best_split(covariate_values, h_values, weights, minsize, levels=None):
    """Maximally selected two-sample split of the active cases.

    Numeric/ordinal covariates (``levels`` None) are cut at midpoints between
    observed values, nominal ones are split into two level sets. Returns
    None when no candidate leaves ``minsize`` cases on both sides.
    """
    weights = np.asarray(weights, dtype=float)
    active = weights > 0
    if active.sum() < 2 * minsize:
        return None
    h = _as_2d(h_values)[active]
    if levels is None:
        x = np.asarray(covariate_values, dtype=float)[active]
        return _best_cutpoint(x, h, minsize)
    x = np.asarray(covariate_values, dtype=object)[active]
    return _best_level_set(x, h, minsize, list(levels))
