"""Replicated simulation runs and their summary metrics.

Every replication of a grid cell draws one dataset from a seed derived
from the master seed and the replication index, and fits every requested
model on that same dataset. Results come back in task order whatever the
number of workers, so the summary only depends on the master seed.
"""
import json
import logging
from dataclasses import asdict, dataclass, replace

import pandas as pd
from joblib import Parallel, delayed

from common import CoatError, ConfigError
from coat_tree.models import FitConfig
from coat_tree.tree import fit
from evaluation_harness.config import DEFAULT_THREADS, MODELS, SUMMARY_COLUMNS
from evaluation_harness.utils import adjusted_rand_index, mean_and_se, rate_interval
from scenario_generator.generator import ScenarioSpec, generate, informative_covariate
from scenario_generator.utils import child_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReplicationResult:
    scenario: str
    design: str
    n: int
    model: str
    replication: int
    seed: int
    root_rejected: bool = False
    root_p_adjusted: float | None = None
    selected_root_covariate: str | None = None
    partition: tuple = ()
    ari: float | None = None
    depth: int = 0
    n_leaves: int = 1
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    def to_dict(self):
        return asdict(self)


def _check_models(models):
    unknown = [m for m in models if m not in MODELS]
    if unknown:
        raise ConfigError(f"unknown model(s) {unknown}, expected any of {sorted(MODELS)}")


def _fit_model(dataset, truth, config, model, base):
    try:
        tree = fit(dataset, replace(config, outcome=MODELS[model]))
    except CoatError as e:
        logger.warning("%s replication %d (%s): %s", model, base["replication"], base["scenario"], e)
        return ReplicationResult(model=model, error=str(e), **base)
    leaf_of = tree.partition()
    partition = tuple(leaf_of[sid] for sid in truth.subject_ids)
    root = tree.root
    return ReplicationResult(
        model=model,
        root_rejected=bool(root.p_adjusted is not None and root.p_adjusted <= config.alpha),
        root_p_adjusted=root.p_adjusted,
        selected_root_covariate=root.split["covariate"] if root.split else None,
        partition=partition,
        ari=adjusted_rand_index(partition, truth.labels),
        depth=tree.depth,
        n_leaves=len(tree.leaves()),
        **base,
    )


def run_replication(cell, config, models, master_seed, replication):
    """Fit every model on the dataset of one replication of one grid cell."""
    scenario, design, n, m = cell
    seed = child_seed(master_seed, replication)
    dataset, truth = generate(ScenarioSpec(scenario, design, n, m, seed))
    config = replace(config, design=design)
    base = {"scenario": scenario, "design": design, "n": n, "replication": replication, "seed": seed}
    return [_fit_model(dataset, truth, config, model, base) for model in models]


def run_replications(grid, config=None, reps=1, models=("coat",), master_seed=0, threads=DEFAULT_THREADS):
    """All replications of every (scenario, design, n, m) cell of ``grid``."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    _check_models(models)
    for cell in grid:
        ScenarioSpec(*cell, seed=0)
    config = config or FitConfig()
    tasks = [(cell, r) for cell in grid for r in range(reps)]
    logger.info("running %d replications over %d grid cells with %d worker(s)", len(tasks), len(grid), threads)
    batches = Parallel(n_jobs=threads)(
        delayed(run_replication)(cell, config, tuple(models), master_seed, r) for cell, r in tasks
    )
    return [result for batch in batches for result in batch]


def _cell_row(key, results, reps):
    scenario, design, model, n = key
    done = [r for r in results if r.ok]
    rejected = sum(r.root_rejected for r in done)
    lo, hi = rate_interval(rejected, len(done))
    mean_ari, ari_se = mean_and_se([r.ari for r in done])
    informative = informative_covariate(scenario)
    on_target = sum(
        r.selected_root_covariate is not None and (informative is None or r.selected_root_covariate == informative)
        for r in done
    )
    return {
        "scenario": scenario, "design": design, "model": model, "n": n, "reps": reps,
        "rate": rejected / len(done) if done else float("nan"),
        "rate_ci_lo": lo, "rate_ci_hi": hi,
        "mean_ari": mean_ari, "ari_se": ari_se,
        "split_rate": on_target / len(done) if done else float("nan"),
        "errors": len(results) - len(done),
    }


def summarize(results):
    """One row per (scenario, design, model, n) cell, in first-seen order."""
    cells = {}
    for r in results:
        cells.setdefault((r.scenario, r.design, r.model, r.n), []).append(r)
    rows = []
    for key, cell_results in cells.items():
        rows.append(_cell_row(key, cell_results, len(cell_results)))
        logger.info("summarized %s: rate=%.3f", key, rows[-1]["rate"])
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def metrics_csv(table):
    return table.to_csv(index=False, lineterminator="\n", float_format="%.6f")


def write_log(results, path):
    """Per-replication JSON lines for audits."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def evaluate(grid, config=None, reps=1, models=("coat",), master_seed=0, threads=DEFAULT_THREADS, log_path=None):
    results = run_replications(grid, config, reps, models, master_seed, threads)
    if log_path:
        write_log(results, log_path)
    return summarize(results)
