"""Synthetic method-comparison data with known subgroups.

Each subject gets five independent normal covariates, a scenario-dependent
true (bias, variance) pair and replicate measurements from a
mixed-effects construction: a subject-level bias deviation, a true level
shared by both methods and method-specific replicate noise. In the paired
design a pair-level effect moves both measurements of a replicate and
cancels in their difference.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from common import ConfigError
from measurement_data.config import DESIGNS
from measurement_data.measurement_data import CovariateSpec, Dataset, SubjectSeries
from scenario_generator.config import (
    COVARIATE_MEANS, COVARIATE_NAMES, COVARIATE_SDS, DEFAULT_M, NULL_BIAS, NULL_VAR,
    PAIR_EFFECT_VAR, Q1, Q2, SCENARIOS, TRUE_LEVEL_MEAN, TRUE_LEVEL_SD, VARIANCE_RATIO,
)
from scenario_generator.utils import fresh_seed, make_rng, subject_ids

logger = logging.getLogger(__name__)


def informative_covariate(scenario):
    """Covariate carrying the subgroup effect, None for the null scenario."""
    return None if scenario == "null" else "X1"


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    design: str
    n: int
    m: int = DEFAULT_M
    seed: int | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario '{self.scenario}', expected one of {SCENARIOS}")
        if self.design not in DESIGNS:
            raise ConfigError(f"unknown design '{self.design}', expected one of {DESIGNS}")
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.m < 2:
            raise ConfigError(f"m must be >= 2, got {self.m}")
        if self.seed is None:
            object.__setattr__(self, "seed", fresh_seed())


@dataclass(frozen=True, eq=False)
class GroundTruth:
    subject_ids: tuple
    labels: np.ndarray
    true_bias: np.ndarray
    true_var: np.ndarray

    def to_frame(self):
        return pd.DataFrame({
            "subject": list(self.subject_ids), "label": self.labels,
            "true_bias": self.true_bias, "true_var": self.true_var,
        })

    def to_csv(self):
        return self.to_frame().to_csv(index=False, lineterminator="\n", float_format="%.17g")


def _conditional_moments(scenario, x1, x2):
    """True (E(Y|X), Var(Y|X)) and subgroup label per subject."""
    low = x1 <= Q1
    n = x1.size
    if scenario == "null":
        return np.full(n, NULL_BIAS), np.full(n, NULL_VAR), np.ones(n, dtype=int)
    label = np.where(low, 1, 2)
    if scenario == "stump_bias":
        return 5.0 + 2.0 * low, np.full(n, 4.0), label
    if scenario == "stump_loa":
        return np.full(n, 5.0), 4.0 + 2.0 * low, label
    high = x2 >= Q2
    bias = 5.0 + 2.0 * (low & high)
    var = 4.0 + 2.0 * ~low
    label = np.select([low & high, low & ~high], [1, 2], default=3)
    return bias, var, label


def true_partition(spec, covariates):
    """GroundTruth for an n x 5 covariate draw in X1..X5 column order."""
    covariates = np.asarray(covariates, dtype=float)
    bias, var, labels = _conditional_moments(spec.scenario, covariates[:, 0], covariates[:, 1])
    return GroundTruth(
        subject_ids=tuple(subject_ids(covariates.shape[0])), labels=labels,
        true_bias=bias.astype(float), true_var=var.astype(float),
    )


def variance_components(total):
    """Split a total single-difference variance in the null ratio."""
    total = np.asarray(total, dtype=float)
    ratio = np.asarray(VARIANCE_RATIO) / sum(VARIANCE_RATIO)
    return total * ratio[0], total * ratio[1], total * ratio[2]


def generate(spec):
    rng = make_rng(spec.seed)
    n, m = spec.n, spec.m
    covariates = rng.normal(COVARIATE_MEANS, COVARIATE_SDS, size=(n, len(COVARIATE_NAMES)))
    truth = true_partition(spec, covariates)
    var_d, var_a, var_b = variance_components(truth.true_var)

    delta = rng.normal(truth.true_bias, np.sqrt(var_d))
    level = rng.normal(TRUE_LEVEL_MEAN, TRUE_LEVEL_SD, size=n)[:, None]
    if spec.design == "paired":
        level = level + rng.normal(0.0, np.sqrt(PAIR_EFFECT_VAR), size=(n, m))
    a = level + delta[:, None] + rng.normal(0.0, np.sqrt(var_a)[:, None], size=(n, m))
    b = level + rng.normal(0.0, np.sqrt(var_b)[:, None], size=(n, m))

    replicates = tuple(range(1, m + 1))
    subjects = tuple(
        SubjectSeries(
            subject_id=sid,
            measurements_a=tuple(float(v) for v in a[i]),
            measurements_b=tuple(float(v) for v in b[i]),
            covariates={name: float(covariates[i, j]) for j, name in enumerate(COVARIATE_NAMES)},
            replicates_a=replicates, replicates_b=replicates,
        )
        for i, sid in enumerate(truth.subject_ids)
    )
    schema = tuple(CovariateSpec(name, "numeric") for name in COVARIATE_NAMES)
    logger.debug("generated %s/%s n=%d m=%d seed=%d", spec.scenario, spec.design, n, m, spec.seed)
    return Dataset(design=spec.design, subjects=subjects, covariate_schema=schema), truth
