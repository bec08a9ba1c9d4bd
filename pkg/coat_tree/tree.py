"""Conditional method agreement trees.

The transformed outcome h is computed once on the full sample (its
constants stay frozen down the tree); every node then tests independence
of h from each covariate on the node's subjects, Bonferroni-adjusts over
the testable covariates and, when the smallest adjusted p-value is at most
alpha, splits the winning covariate at its maximally selected cut.
"""
import logging
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from common import ConfigError, DegenerateError, EstimationError, RoutingError, UntestableError
from ba_estimators.ba_estimators import estimate, mean_outcome, subject_summaries, transform
from coat_tree.config import TEST_VARIANCE_MODE
from coat_tree.models import CoatNode, CoatTree, FitConfig
from inference_engine.config import MAX_NOMINAL_LEVELS
from inference_engine.inference_engine import CovariateTransform, TestResult, best_split, node_test
from inference_engine.utils import adjust_bonferroni

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TwoSampleResult:
    covariate: str
    test: TestResult
    levels: tuple
    estimates: dict  # level -> BAEstimate
    n: dict  # level -> number of subjects

    def to_dict(self):
        return {
            "covariate": self.covariate,
            "test": self.test.to_dict(),
            "groups": [
                {"level": level, "n": self.n[level], **_estimate_dict(self.estimates[level])}
                for level in self.levels
            ],
        }


def _estimate_dict(est):
    return {"bias": est.bias, "var_total": est.var_total, "loa": [est.loa_lower, est.loa_upper], "clamped": est.clamped}


class _Covariate:
    """Encoded covariate: test design g, split values and level set."""

    def __init__(self, spec, values):
        self.spec = spec
        self.name = spec.name
        # ordinal splits are stored as level sets, so routing uses the raw level
        self.raw_values = list(values)
        if spec.kind == "nominal" and len(spec.levels) > MAX_NOMINAL_LEVELS:
            raise ConfigError(
                f"nominal covariate {spec.name} has {len(spec.levels)} levels, at most {MAX_NOMINAL_LEVELS} are supported"
            )
        if spec.kind == "ordinal":
            scores = {level: i + 1 for i, level in enumerate(spec.levels)}
            self.split_values = np.array([scores[v] for v in values], dtype=float)
            self.split_levels = None
        elif spec.kind == "numeric":
            self.split_values = np.asarray(values, dtype=float)
            self.split_levels = None
        else:
            self.split_values = np.asarray(values, dtype=object)
            self.split_levels = tuple(spec.levels)
        self.g = CovariateTransform.for_covariate(spec).encode(
            self.split_values if spec.kind == "ordinal" else values
        )

    def describe(self, split):
        if self.spec.kind == "numeric":
            return {"covariate": self.name, "cutpoint": split.cutpoint}
        if self.spec.kind == "ordinal":
            left = [level for i, level in enumerate(self.spec.levels) if i + 1 <= split.cutpoint]
            return {"covariate": self.name, "levels": left}
        return {"covariate": self.name, "levels": list(split.left_levels)}


def _node_estimate(summaries, design, variance_mode):
    try:
        return estimate(summaries, design, variance_mode)
    except EstimationError as e:
        logger.warning("node estimate unavailable (%d subjects): %s", len(summaries), e)
        return None


def _outcome_matrix(summaries, design, outcome):
    """Full-sample h the node tests run on."""
    if outcome == "mean_only":
        return mean_outcome(summaries, design).reshape(-1, 1)
    return transform(summaries, design, TEST_VARIANCE_MODE).matrix(outcome)


def _test_covariates(covariates, h, mask):
    """Per-covariate tests on the node; untestable covariates map to None."""
    results = {}
    for cov in covariates:
        try:
            results[cov.name] = node_test(cov.g[mask], h[mask])
        except (UntestableError, DegenerateError):
            results[cov.name] = None
    testable = [name for name, res in results.items() if res is not None]
    if testable:
        adjusted = adjust_bonferroni([results[name].p_value for name in testable], len(testable))
        for name, p_adj in zip(testable, adjusted):
            results[name] = replace(results[name], p_adjusted=p_adj)
    return results


def _select(results):
    """Covariate with the smallest adjusted p-value; ties go to the larger statistic, then schema order."""
    best = None
    for name, res in results.items():
        if res is None:
            continue
        if best is None or (res.p_adjusted, -res.statistic) < (results[best].p_adjusted, -results[best].statistic):
            best = name
    return best


def _p_table(results):
    table = {}
    for name, res in results.items():
        table[name] = {"untestable": True} if res is None else res.to_dict()
    return table


def _resolve_config(dataset, config):
    config = config or FitConfig()
    if config.design is not None and config.design != dataset.design:
        raise ConfigError(f"config design '{config.design}' does not match dataset design '{dataset.design}'")
    return replace(config, design=dataset.design)


def fit(dataset, config=None):
    config = _resolve_config(dataset, config)
    if config.include_mean_covariate:
        dataset = dataset.with_mean_covariate()

    summaries = subject_summaries(dataset)
    h = _outcome_matrix(summaries, dataset.design, config.outcome)
    covariates = [_Covariate(spec, [s.covariates[spec.name] for s in dataset.subjects]) for spec in dataset.covariate_schema]
    ids = np.array(dataset.subject_ids, dtype=object)
    diagnostics = {"nodes_tested": 0, "splits_rejected_minsize": 0}

    def make_node(node_id, depth, mask):
        node_summaries = [s for s, keep in zip(summaries, mask) if keep]
        est = _node_estimate(node_summaries, dataset.design, config.variance_mode)
        return CoatNode(id=node_id, depth=depth, subject_ids=list(ids[mask]), estimate=est)

    root_mask = np.ones(len(ids), dtype=bool)
    root = make_node(1, 1, root_mask)
    queue = deque([(root, root_mask)])
    next_id = 2
    while queue:
        node, mask = queue.popleft()
        n_node = int(mask.sum())
        if n_node < config.minsplit or (config.maxdepth is not None and node.depth > config.maxdepth):
            logger.debug("node %d: leaf by stopping rule (n=%d, depth=%d)", node.id, n_node, node.depth)
            continue

        diagnostics["nodes_tested"] += 1
        results = _test_covariates(covariates, h, mask)
        node.p_table = _p_table(results)
        selected = _select(results)
        if selected is None:
            logger.debug("node %d: no testable covariate", node.id)
            continue
        chosen = results[selected]
        node.p_adjusted, node.statistic, node.df = chosen.p_adjusted, chosen.statistic, chosen.df
        if chosen.p_adjusted > config.alpha:
            logger.debug("node %d: min adjusted p %.4g > alpha", node.id, chosen.p_adjusted)
            continue

        cov = next(c for c in covariates if c.name == selected)
        split = best_split(cov.split_values, h, mask.astype(float), config.minsize, cov.split_levels)
        if split is None:
            diagnostics["splits_rejected_minsize"] += 1
            logger.debug("node %d: no feasible split on %s", node.id, selected)
            continue

        node.split = cov.describe(split)
        goes_left = np.array([node.goes_left(v) for v in cov.raw_values], dtype=bool)
        for child_mask in (mask & goes_left, mask & ~goes_left):
            child = make_node(next_id, node.depth + 1, child_mask)
            next_id += 1
            node.children.append(child)
            queue.append((child, child_mask))
        logger.debug("node %d: split %s (p_adj=%.4g)", node.id, node.split, node.p_adjusted)

    return CoatTree(
        root=root, config=config, covariate_schema=dataset.covariate_schema,
        design=dataset.design, diagnostics=diagnostics, dataset=dataset,
    )


def predict_subgroup(tree, covariates):
    """Terminal node id for a subject with the given covariate values."""
    node = tree.root
    while node.children:
        name = node.split["covariate"]
        if name not in covariates or covariates[name] is None:
            raise RoutingError(f"covariate '{name}' is required to route through node {node.id}")
        node = node.children[0] if node.goes_left(covariates[name]) else node.children[1]
    return node.id


def two_sample_ba_test(dataset, group_covariate, config=None):
    """Test equal (bias, variance) between the two groups of a binary covariate."""
    config = _resolve_config(dataset, config)
    spec = dataset.covariate(group_covariate)
    values = [s.covariates[group_covariate] for s in dataset.subjects]
    levels = tuple(level for level in spec.levels if level in set(values)) if spec.categorical else ()
    if spec.kind not in ("binary", "nominal") or len(levels) != 2:
        raise ConfigError(f"covariate '{group_covariate}' is not binary (observed levels: {sorted(set(map(str, values)))})")

    summaries = subject_summaries(dataset)
    n = {level: values.count(level) for level in levels}
    for level, count in n.items():
        if count < 2:
            raise EstimationError(f"group {group_covariate}={level} has {count} subject(s), at least 2 are required")

    h = _outcome_matrix(summaries, dataset.design, config.outcome)
    cov = _Covariate(replace(spec, levels=levels), values)
    result = node_test(cov.g, h)
    result = replace(result, p_adjusted=result.p_value)

    estimates = {}
    for level in levels:
        group = [s for s, v in zip(summaries, values) if v == level]
        estimates[level] = estimate(group, dataset.design, config.variance_mode)
    return TwoSampleResult(covariate=group_covariate, test=result, levels=levels, estimates=estimates, n=n)
