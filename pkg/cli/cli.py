import json
import logging
import os
import sys

import click

from common import USAGE_ERRORS, CoatError, configure_logging, load_env
from coat_tree.config import DEFAULT_ALPHA, DEFAULT_MINSIZE
from coat_tree.schemas import make_config
from coat_tree.tree import fit, two_sample_ba_test
from coat_tree.utils import plot_data, render_text, serialize
from ba_estimators.config import VARIANCE_MODES
from evaluation_harness.config import DEFAULT_REPS, DEFAULT_THREADS, MODELS
from evaluation_harness.evaluation_harness import evaluate, metrics_csv
from evaluation_harness.utils import adjusted_rand_index
from measurement_data.config import DESIGNS
from measurement_data.measurement_data import parse_long_csv, validate
from measurement_data.utils import parse_covariate_schema, schema_to_text
from scenario_generator.config import DEFAULT_M, SCENARIOS
from scenario_generator.generator import ScenarioSpec, generate
from scenario_generator.utils import fresh_seed

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2


class CoatGroup(click.Group):
    """Maps failures to exit codes: 1 for usage, config and file errors, 2 for data errors."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.show()
            ctx.exit(EXIT_USAGE)
        except USAGE_ERRORS + (OSError,) as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_USAGE)
        except CoatError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_DATA)


def _split_list(text, cast=str):
    return [cast(item.strip()) for item in text.split(",") if item.strip()]


def _read_dataset(path, design, covariates):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_long_csv(text, design, parse_covariate_schema(covariates))


def _config(design=None, **options):
    if options.get("outcome"):
        options["outcome"] = options["outcome"].replace("-", "_")
    return make_config(design=design, **{k: v for k, v in options.items() if v is not None})


def _seed(seed):
    if seed is None:
        seed = fresh_seed()
        click.echo(f"seed: {seed}", err=True)
    return seed


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def fit_options(func):
    options = [
        click.option("--alpha", type=float, default=None, help=f"Significance level for splitting [default: {DEFAULT_ALPHA}]."),
        click.option("--minsize", type=int, default=None, help=f"Minimum subjects per child [default: {DEFAULT_MINSIZE}]."),
        click.option("--minsplit", type=int, default=None, help="Minimum subjects to attempt a split [default: max(20, 2*minsize)]."),
        click.option("--maxdepth", type=int, default=None, help="Maximum number of split layers [default: unlimited]."),
        click.option("--variance-mode", type=click.Choice(VARIANCE_MODES), default=None, help="Paired between-subject term [default: msb]."),
        click.option("--outcome", type=click.Choice(["ba", "mean-only"]), default=None, help="Transformation fed to the tree [default: ba]."),
        click.option("--with-mean", "include_mean_covariate", is_flag=True, default=None, help="Add the subject mean measurement as a covariate."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def data_options(func):
    options = [
        click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False), help="Long-format CSV file."),
        click.option("--design", type=click.Choice(DESIGNS), required=True, help="Replicate design."),
        click.option("--covariates", default="", show_default=True, help="Covariate schema, e.g. sex:binary,age:numeric."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group(cls=CoatGroup)
@click.option("--log-level", default=None, help="Logging level [default: $COAT_LOG_LEVEL or WARNING].")
def cli(log_level):
    """Conditional method agreement trees."""
    configure_logging(log_level or load_env())


@cli.command("fit")
@data_options
@fit_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the tree JSON here instead of stdout.")
@click.option("--plotdata", type=click.Path(dir_okay=False), default=None, help="Write per-leaf plot data CSV here.")
def cmd_fit(input_path, design, covariates, out, plotdata, **options):
    """Fit an agreement tree and print its text rendering and JSON."""
    dataset = _read_dataset(input_path, design, covariates)
    config = _config(design, **options)
    for warning in validate(dataset, config.minsize):
        click.echo(f"warning: {warning}", err=True)
    tree = fit(dataset, config)
    click.echo(render_text(tree), nl=False)
    document = serialize(tree, "json")
    if out:
        _write(out, document + "\n")
    else:
        click.echo(document)
    if plotdata:
        _write(plotdata, plot_data(tree).to_csv(index=False, lineterminator="\n"))


@cli.command("test2")
@data_options
@fit_options
@click.option("--group", required=True, help="Binary covariate defining the two groups.")
def cmd_test2(input_path, design, covariates, group, **options):
    """Two-sample test of equal bias and variance between two groups."""
    dataset = _read_dataset(input_path, design, covariates)
    result = two_sample_ba_test(dataset, group, _config(design, **options))
    test = result.test
    click.echo(f"two-sample agreement test on {group}: statistic={test.statistic:.4f} df={test.df} p={test.p_value:.4g}")
    for level in result.levels:
        est = result.estimates[level]
        click.echo(
            f"  {group}={level}: n={result.n[level]} bias={est.bias:.4f} "
            f"LoA=[{est.loa_lower:.4f}, {est.loa_upper:.4f}]"
        )
    click.echo(json.dumps(result.to_dict(), indent=2))


@cli.command("simulate")
@click.option("--scenario", required=True, help=f"One of {', '.join(SCENARIOS)}.")
@click.option("--design", type=click.Choice(DESIGNS), required=True, help="Replicate design.")
@click.option("--n", "n", type=int, required=True, help="Number of subjects.")
@click.option("--m", "m", type=int, default=DEFAULT_M, show_default=True, help="Replicates per subject.")
@click.option("--seed", type=int, default=None, help="Random seed [default: fresh entropy, printed].")
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True, help="Output directory.")
def cmd_simulate(scenario, design, n, m, seed, out):
    """Write a simulated dataset and its ground-truth sidecar."""
    spec = ScenarioSpec(scenario, design, n, m, _seed(seed))
    dataset, truth = generate(spec)
    os.makedirs(out, exist_ok=True)
    stem = f"{scenario}_{design}_n{n}_seed{spec.seed}"
    _write(os.path.join(out, f"{stem}.csv"), dataset.to_long_csv())
    _write(os.path.join(out, f"{stem}_truth.csv"), truth.to_csv())
    click.echo(os.path.join(out, f"{stem}.csv"))
    click.echo(f"covariates: {schema_to_text(dataset.covariate_schema)}", err=True)


@cli.command("evaluate")
@click.option("--scenario", default="null", show_default=True, help="Comma-separated scenarios.")
@click.option("--design", default="unpaired", show_default=True, help="Comma-separated designs.")
@click.option("--n", "n_grid", default="100", show_default=True, help="Comma-separated subject counts.")
@click.option("--m", "m", type=int, default=DEFAULT_M, show_default=True, help="Replicates per subject.")
@click.option("--reps", type=int, default=DEFAULT_REPS, show_default=True, help="Replications per grid cell.")
@click.option("--models", default="coat,ctree_mean", show_default=True, help=f"Comma-separated subset of {', '.join(MODELS)}.")
@click.option("--seed", type=int, default=None, help="Master seed [default: fresh entropy, printed].")
@click.option("--threads", type=int, default=DEFAULT_THREADS, show_default=True, help="Parallel workers.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Metrics CSV path [default: stdout].")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="Per-replication JSONL log.")
@fit_options
def cmd_evaluate(scenario, design, n_grid, m, reps, models, seed, threads, out, log_path, **options):
    """Run the simulation grid and write the metrics table."""
    try:
        sizes = _split_list(n_grid, int)
    except ValueError:
        raise click.BadParameter(f"not a list of integers: {n_grid}", param_hint="--n") from None
    grid = [(s, d, n, m) for s in _split_list(scenario) for d in _split_list(design) for n in sizes]
    config = _config(**options)
    table = evaluate(grid, config, reps, _split_list(models), _seed(seed), threads, log_path)
    text = metrics_csv(table)
    if out:
        _write(out, text)
    else:
        click.echo(text, nl=False)


@cli.command("ari")
@click.argument("labels_a")
@click.argument("labels_b")
def cmd_ari(labels_a, labels_b):
    """Adjusted Rand index of two comma-separated labelings."""
    try:
        value = adjusted_rand_index(_split_list(labels_a), _split_list(labels_b))
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    click.echo(f"{value:.6f}")


def main():
    sys.exit(cli())
