import json
from dataclasses import replace

import pytest

from common import ConfigError, EstimationError, RoutingError
from ba_estimators.ba_estimators import estimate_dataset, subject_summaries, transform
from coat_tree.models import CoatNode, CoatTree, FitConfig
from coat_tree.schemas import make_config
from coat_tree.tree import fit, predict_subgroup, two_sample_ba_test
from inference_engine.inference_engine import node_test
from coat_tree.utils import load_tree, plot_data, render_text, serialize, tree_to_frame
from measurement_data.measurement_data import parse_long_csv
from measurement_data.utils import parse_covariate_schema
from scenario_generator.generator import ScenarioSpec, generate


@pytest.fixture
def x_only(step_dataset):
    return step_dataset.restrict_covariates(["x", "sex"])


def test_numeric_split(x_only):
    tree = fit(x_only)
    root = tree.root
    assert root.kind == "inner"
    assert root.split == {"covariate": "x", "cutpoint": 20.5}
    assert root.p_adjusted <= 0.05
    assert root.df == 1
    left, right = root.children
    assert (left.id, right.id) == (2, 3)
    assert (left.n_subjects, right.n_subjects) == (20, 20)
    assert left.estimate.bias == pytest.approx(0.0)
    assert left.estimate.var_total == pytest.approx(2 / 3)
    assert right.estimate.bias == pytest.approx(10.0)
    # children are homogeneous: nothing left to test
    assert left.kind == "leaf"
    assert left.p_table == {"x": {"untestable": True}, "sex": {"untestable": True}}
    assert tree.depth == 1
    assert tree.diagnostics["nodes_tested"] == 3


def test_p_table_at_root(x_only):
    table = fit(x_only).root.p_table
    assert table["sex"]["p_adjusted"] == pytest.approx(1.0)
    assert table["x"]["p_adjusted"] == pytest.approx(min(1.0, 2 * table["x"]["p_value"]))


def test_ordinal_split(step_dataset):
    tree = fit(step_dataset)
    assert tree.root.split == {"covariate": "stage", "levels": ["I", "II"]}
    assert predict_subgroup(tree, {"stage": "II"}) == 2
    assert predict_subgroup(tree, {"stage": "III"}) == 3


def test_partition_covers_subjects(step_dataset):
    tree = fit(step_dataset)
    partition = tree.partition()
    assert sorted(partition) == sorted(step_dataset.subject_ids)
    for node in tree.nodes():
        if node.children:
            left, right = node.children
            assert sorted(left.subject_ids + right.subject_ids) == sorted(node.subject_ids)


def test_minsplit_above_n_gives_plain_analysis(step_dataset):
    tree = fit(step_dataset, make_config(minsize=10, minsplit=100))
    assert tree.root.kind == "leaf"
    assert tree.root.estimate == estimate_dataset(step_dataset)
    assert tree.diagnostics["nodes_tested"] == 0


def test_tiny_alpha_gives_single_leaf(step_dataset):
    tree = fit(step_dataset, make_config(alpha=1e-12))
    assert tree.root.kind == "leaf"
    assert tree.root.p_adjusted > 1e-12
    assert tree.root.estimate == estimate_dataset(step_dataset)


def test_exploratory_depth_limit():
    dataset, _ = generate(ScenarioSpec("null", "unpaired", 80, seed=21))
    tree = fit(dataset, make_config(alpha=1, minsize=5, maxdepth=2))
    assert tree.config.alpha == 1
    assert 1 <= tree.depth <= 2
    assert [node.id for node in tree.nodes()] == list(range(1, len(tree.nodes()) + 1))
    assert all(leaf.n_subjects >= 5 for leaf in tree.leaves())
    assert len(tree.partition()) == 80


def test_minsize_respected_on_simulated_data():
    dataset, _ = generate(ScenarioSpec("tree", "paired", 120, seed=9))
    tree = fit(dataset, make_config(alpha=0.5, minsize=15))
    assert all(leaf.n_subjects >= 15 for leaf in tree.leaves())


def test_outcome_degrees_of_freedom():
    dataset, _ = generate(ScenarioSpec("null", "paired", 60, seed=2))
    assert fit(dataset).root.p_table["X1"]["df"] == 2
    assert fit(dataset, make_config(outcome="mean_only")).root.p_table["X1"]["df"] == 1


def test_subject_order_does_not_change_structure(x_only):
    reordered = replace(x_only, subjects=x_only.subjects[::-1])
    a, b = fit(x_only), fit(reordered)
    assert a.root.split == b.root.split
    assert a.partition() == b.partition()


def test_mean_covariate_option(x_only):
    tree = fit(x_only, make_config(include_mean_covariate=True))
    assert [spec.name for spec in tree.covariate_schema] == ["x", "sex", "mean_measurement"]
    assert "mean_measurement" in tree.root.p_table


def test_design_mismatch(x_only):
    with pytest.raises(ConfigError):
        fit(x_only, make_config(design="unpaired"))


def test_too_many_nominal_levels():
    rows = ["subject,method,replicate,value,site"]
    for i in range(14):
        for rep in (1, 2):
            rows.append(f"s{i:02d},A,{rep},{i + rep},L{i % 7}")
            rows.append(f"s{i:02d},B,{rep},{i},L{i % 7}")
    dataset = parse_long_csv("\n".join(rows) + "\n", "paired", parse_covariate_schema("site:nominal"))
    with pytest.raises(ConfigError, match="at most 6"):
        fit(dataset)


def test_config_validation():
    assert make_config(minsize=15).minsplit == 30
    assert make_config().minsplit == 20
    with pytest.raises(ConfigError):
        make_config(minsize=10, minsplit=15)
    with pytest.raises(ConfigError):
        make_config(alpha=0)
    with pytest.raises(ConfigError):
        make_config(variance_mode="pooled")


def test_predict_single_leaf(step_dataset):
    tree = fit(step_dataset, make_config(minsplit=100))
    assert predict_subgroup(tree, {}) == 1


def test_predict_boundary_goes_left():
    left, right = CoatNode(2, 2, ["a"]), CoatNode(3, 2, ["b"])
    root = CoatNode(1, 1, ["a", "b"], split={"covariate": "X1", "cutpoint": 20.0}, children=[left, right])
    tree = CoatTree(root=root, config=FitConfig(), covariate_schema=(), design="paired")
    assert predict_subgroup(tree, {"X1": 20}) == 2
    assert predict_subgroup(tree, {"X1": 20.01}) == 3
    with pytest.raises(RoutingError, match="X1"):
        predict_subgroup(tree, {"X2": 1})


def test_two_sample_shift(step_csv):
    dataset = parse_long_csv(step_csv, "paired", parse_covariate_schema("side:binary,sex:binary"))
    result = two_sample_ba_test(dataset, "side")
    assert result.test.p_value < 0.001
    assert result.test.p_adjusted == result.test.p_value
    assert result.n == {"high": 20, "low": 20}
    assert result.estimates["low"].bias == pytest.approx(0.0)
    assert result.estimates["high"].bias == pytest.approx(10.0)
    report = result.to_dict()
    assert [group["level"] for group in report["groups"]] == ["high", "low"]


def test_two_sample_null_group(step_csv):
    dataset = parse_long_csv(step_csv, "paired", parse_covariate_schema("sex:binary"))
    result = two_sample_ba_test(dataset, "sex")
    assert 0.0 <= result.test.p_value <= 1.0


def test_two_sample_requires_binary(step_dataset):
    with pytest.raises(ConfigError):
        two_sample_ba_test(step_dataset, "x")
    with pytest.raises(ConfigError):
        two_sample_ba_test(step_dataset, "stage")


def test_two_sample_small_group(step_csv):
    dataset = parse_long_csv(step_csv, "paired", parse_covariate_schema("side:binary"))
    small = dataset.subset(dataset.subject_ids[:21])
    with pytest.raises(EstimationError, match="high"):
        two_sample_ba_test(small, "side")


def test_json_round_trip(step_dataset):
    tree = fit(step_dataset)
    document = serialize(tree, "json")
    payload = json.loads(document)
    assert payload["root"]["id"] == 1
    assert payload["root"]["kind"] == "inner"
    assert payload["root"]["n"] == 40
    assert len(payload["root"]["estimate"]["loa"]) == 2
    assert load_tree(document) == tree


def test_single_leaf_json(step_dataset):
    tree = fit(step_dataset, make_config(minsplit=100))
    payload = json.loads(serialize(tree))
    assert payload["root"]["kind"] == "leaf"
    assert payload["root"]["children"] == []


def test_text_rendering(x_only):
    text = render_text(fit(x_only))
    lines = text.splitlines()
    assert lines[0].startswith("COAT paired design")
    assert lines[1].startswith("[1] n=40 bias=5.0000")
    assert "split=x" in lines[1]
    assert lines[2].startswith("  x <= 20.5: [2] n=20 bias=0.0000")
    assert lines[3].startswith("  x > 20.5: [3] n=20 bias=10.0000")
    assert render_text(fit(x_only)) == text


def test_plot_data_rows(x_only):
    tree = fit(x_only)
    frame = plot_data(tree)
    assert len(frame) == 120
    assert set(frame["node"]) == {2, 3}
    dataset, _ = generate(ScenarioSpec("null", "unpaired", 30, seed=1))
    assert len(plot_data(fit(dataset))) == 30


def test_unknown_format(x_only):
    with pytest.raises(ConfigError):
        serialize(fit(x_only), "yaml")


def test_tree_frame(x_only):
    frame = tree_to_frame(fit(x_only))
    assert list(frame["id"]) == [1, 2, 3]
    assert list(frame["kind"]) == ["inner", "leaf", "leaf"]
    assert frame.loc[0, "split"] == "<= 20.5"


def test_predict_non_numeric_value():
    left, right = CoatNode(2, 2, ["a"]), CoatNode(3, 2, ["b"])
    root = CoatNode(1, 1, ["a", "b"], split={"covariate": "X1", "cutpoint": 20.0}, children=[left, right])
    tree = CoatTree(root=root, config=FitConfig(), covariate_schema=(), design="paired")
    with pytest.raises(RoutingError, match="numeric"):
        predict_subgroup(tree, {"X1": "high"})


def _single_replicate_csv(n=24):
    rows = ["subject,method,replicate,value,x"]
    for i in range(1, n + 1):
        bias = 0.0 if i <= n // 2 else 10.0
        rows.append(f"s{i:02d},A,1,{50 + i + bias},{i}")
        rows.append(f"s{i:02d},B,1,{50 + i},{i}")
    return "\n".join(rows) + "\n"


def test_mean_only_needs_no_replicates():
    dataset = parse_long_csv(_single_replicate_csv(), "paired", parse_covariate_schema("x:numeric"))
    with pytest.raises(EstimationError):
        fit(dataset)
    tree = fit(dataset, make_config(outcome="mean_only", minsize=5))
    assert tree.root.split == {"covariate": "x", "cutpoint": 12.5}
    assert tree.root.estimate is None


def test_stopping_is_monotone_in_alpha():
    dataset, _ = generate(ScenarioSpec("stump_bias", "unpaired", 60, seed=8))
    trees = [fit(dataset, make_config(alpha=alpha, minsize=5)) for alpha in (1e-8, 0.01, 0.05, 0.5, 1.0)]
    p_root = trees[0].root.p_adjusted
    assert all(tree.root.p_adjusted == pytest.approx(p_root) for tree in trees)
    sizes = [len(tree.nodes()) for tree in trees]
    assert sizes == sorted(sizes)
    for smaller, larger in zip(trees, trees[1:]):
        if smaller.root.kind == "inner":
            assert larger.root.split == smaller.root.split


@pytest.mark.parametrize("design", ["unpaired", "paired"])
def test_leaf_estimates_average_node_local_components(design):
    dataset, _ = generate(ScenarioSpec("tree", design, 120, seed=9))
    tree = fit(dataset, make_config(alpha=0.5, minsize=15))
    for leaf in tree.leaves():
        summaries = subject_summaries(dataset.subset(leaf.subject_ids))
        local = transform(summaries, design, tree.config.variance_mode)
        assert local.h1.mean() == pytest.approx(leaf.estimate.bias, abs=1e-10)
        assert local.h2.mean() == pytest.approx(leaf.estimate.var_total_raw, abs=1e-10)


def _node_on(tree, covariate):
    return [node for node in tree.nodes() if node.split and node.split["covariate"] == covariate]


@pytest.mark.slow
def test_tree_scenario_recovery():
    dataset, truth = generate(ScenarioSpec("tree", "paired", 300, seed=2))
    tree = fit(dataset)
    assert tree.root.split["covariate"] == "X1"
    assert 18.5 <= tree.root.split["cutpoint"] <= 21.5
    nested = _node_on(tree, "X2")
    assert nested and 92 <= nested[0].split["cutpoint"] <= 108

    ids = list(truth.subject_ids)
    for point, label, bias in (({"X1": 10, "X2": 150}, 1, 7), ({"X1": 10, "X2": 50}, 2, 5), ({"X1": 30, "X2": 100}, 3, 5)):
        node = tree.node(predict_subgroup(tree, point))
        group = [sid for sid, lab in zip(ids, truth.labels) if lab == label]
        oracle = estimate_dataset(dataset.subset(group))
        assert node.estimate.bias == pytest.approx(bias, abs=0.8)
        assert node.estimate.var_total == pytest.approx(oracle.var_total, abs=0.8)


def test_node_tests_use_literal_components():
    dataset, _ = generate(ScenarioSpec("stump_loa", "paired", 80, seed=5))
    tree = fit(dataset)
    h = transform(subject_summaries(dataset), "paired", "literal").matrix()
    expected = node_test(dataset.covariate_values("X1"), h)
    assert tree.root.p_table["X1"]["statistic"] == pytest.approx(expected.statistic)
    assert tree.config.variance_mode == "msb"
    assert tree.root.estimate == estimate_dataset(dataset, "msb")
