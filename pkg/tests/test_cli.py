import json

import pytest
from click.testing import CliRunner

from cli.cli import cli
from coat_tree.utils import load_tree

STEP_SCHEMA = "x:numeric,sex:binary,stage:ordinal=I|II|III"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def step_file(tmp_path, step_csv):
    path = tmp_path / "step.csv"
    path.write_text(step_csv)
    return str(path)


def test_fit_writes_tree(runner, step_file, tmp_path):
    out = tmp_path / "tree.json"
    plot = tmp_path / "plot.csv"
    result = runner.invoke(cli, [
        "fit", "--input", step_file, "--design", "paired", "--covariates", STEP_SCHEMA,
        "--out", str(out), "--plotdata", str(plot),
    ])
    assert result.exit_code == 0, result.output
    assert "COAT paired design" in result.output
    tree = load_tree(out.read_text())
    assert tree.root.split["covariate"] == "stage"
    assert plot.read_text().splitlines()[0] == "node,subject,replicate,mean,difference"


def test_fit_prints_json(runner, step_file):
    result = runner.invoke(cli, ["fit", "--input", step_file, "--design", "paired", "--minsplit", "100"])
    assert result.exit_code == 0, result.output
    document = result.output[result.output.index("{"):]
    assert json.loads(document)["root"]["kind"] == "leaf"


def test_fit_missing_file(runner, tmp_path):
    result = runner.invoke(cli, ["fit", "--input", str(tmp_path / "nope.csv"), "--design", "paired"])
    assert result.exit_code == 1


def test_fit_bad_option(runner, step_file):
    result = runner.invoke(cli, ["fit", "--input", step_file, "--design", "paired", "--alpha", "0"])
    assert result.exit_code == 1
    result = runner.invoke(cli, ["fit", "--input", step_file, "--design", "crossed"])
    assert result.exit_code == 1


def test_fit_unknown_covariate(runner, step_file):
    result = runner.invoke(cli, ["fit", "--input", step_file, "--design", "paired", "--covariates", "age:numeric"])
    assert result.exit_code == 1


def test_test2(runner, step_file):
    result = runner.invoke(cli, [
        "test2", "--input", step_file, "--design", "paired", "--covariates", "side:binary", "--group", "side",
    ])
    assert result.exit_code == 0, result.output
    assert "side=low: n=20 bias=0.0000" in result.output


def test_test2_needs_binary_group(runner, step_file):
    result = runner.invoke(cli, [
        "test2", "--input", step_file, "--design", "paired", "--covariates", "x:numeric", "--group", "x",
    ])
    assert result.exit_code == 1


def test_test2_small_group_is_data_error(runner, tmp_path, step_csv):
    lines = step_csv.splitlines()
    # keep s01..s21: one subject on the high side
    kept = [lines[0]] + [line for line in lines[1:] if int(line.split(",")[0][1:]) <= 21]
    path = tmp_path / "small.csv"
    path.write_text("\n".join(kept) + "\n")
    result = runner.invoke(cli, [
        "test2", "--input", str(path), "--design", "paired", "--covariates", "side:binary", "--group", "side",
    ])
    assert result.exit_code == 2


def test_simulate(runner, tmp_path):
    result = runner.invoke(cli, [
        "simulate", "--scenario", "tree", "--design", "unpaired", "--n", "30", "--seed", "5", "--out", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "tree_unpaired_n30_seed5.csv").exists()
    truth = (tmp_path / "tree_unpaired_n30_seed5_truth.csv").read_text().splitlines()
    assert len(truth) == 31
    assert "covariates: X1:numeric,X2:numeric" in result.output


def test_simulate_unknown_scenario(runner, tmp_path):
    result = runner.invoke(cli, ["simulate", "--scenario", "wave", "--design", "paired", "--n", "30", "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_evaluate_is_reproducible(runner, tmp_path):
    args = ["evaluate", "--scenario", "null", "--design", "paired", "--n", "40", "--reps", "2", "--seed", "11", "--models", "coat"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(cli, args + ["--out", str(first)]).exit_code == 0
    assert runner.invoke(cli, args + ["--out", str(second)]).exit_code == 0
    assert first.read_text() == second.read_text()
    assert first.read_text().startswith("scenario,design,model,n,reps,rate")


def test_evaluate_rejects_zero_reps(runner):
    result = runner.invoke(cli, ["evaluate", "--reps", "0", "--seed", "1"])
    assert result.exit_code == 1


def test_evaluate_rejects_bad_sizes(runner):
    result = runner.invoke(cli, ["evaluate", "--n", "ten", "--seed", "1"])
    assert result.exit_code == 1


def test_ari(runner):
    result = runner.invoke(cli, ["ari", "1,1,2,2", "2,2,1,1"])
    assert result.exit_code == 0
    assert result.output.strip() == "1.000000"
    result = runner.invoke(cli, ["ari", "1,1,1,2", "1,2,1,2"])
    assert result.output.strip() == "0.000000"


def test_ari_length_mismatch(runner):
    assert runner.invoke(cli, ["ari", "1,2", "1,2,3"]).exit_code == 1
