import json

import numpy as np
import pandas as pd

from common import ConfigError
from coat_tree.config import FORMATS, TEXT_DIGITS
from coat_tree.schemas import TreeSchema

FRAME_COLUMNS = [
    "id", "kind", "depth", "n", "covariate", "split", "p_adjusted",
    "bias", "var_total", "loa_lower", "loa_upper", "clamped",
]


def _split_text(split):
    if not split:
        return ""
    if "cutpoint" in split:
        return f"<= {split['cutpoint']:g}"
    return "in {" + ", ".join(map(str, split["levels"])) + "}"


def tree_to_frame(tree):
    """One row per node in id order."""
    rows = []
    for node in tree.nodes():
        est = node.estimate
        rows.append({
            "id": node.id, "kind": node.kind, "depth": node.depth, "n": node.n_subjects,
            "covariate": node.split["covariate"] if node.split else None,
            "split": _split_text(node.split),
            "p_adjusted": node.p_adjusted,
            "bias": est.bias if est else np.nan,
            "var_total": est.var_total if est else np.nan,
            "loa_lower": est.loa_lower if est else np.nan,
            "loa_upper": est.loa_upper if est else np.nan,
            "clamped": est.clamped if est else None,
        })
    return pd.DataFrame(rows, columns=FRAME_COLUMNS)


def _fmt(value):
    return f"{value:.{TEXT_DIGITS}f}"


def _node_line(node):
    est = node.estimate
    parts = [f"[{node.id}] n={node.n_subjects}"]
    if est is None:
        parts.append("estimate=NA")
    else:
        parts.append(f"bias={_fmt(est.bias)} LoA=[{_fmt(est.loa_lower)}, {_fmt(est.loa_upper)}] var={_fmt(est.var_total)}")
        if est.clamped:
            parts.append("(clamped)")
    if node.children:
        parts.append(f"split={node.split['covariate']} p={node.p_adjusted:.4g}")
    return " ".join(parts)


def render_text(tree):
    cfg = tree.config
    maxdepth = "none" if cfg.maxdepth is None else cfg.maxdepth
    lines = [
        f"COAT {tree.design} design, outcome={cfg.outcome}, variance_mode={cfg.variance_mode}, "
        f"alpha={cfg.alpha:g}, minsize={cfg.minsize}, minsplit={cfg.minsplit}, maxdepth={maxdepth}"
    ]

    def walk(node, indent, rule):
        prefix = "  " * indent + (f"{rule}: " if rule else "")
        lines.append(prefix + _node_line(node))
        for side, child in zip((True, False), node.children):
            walk(child, indent + 1, node.rule(side))

    walk(tree.root, 0, None)
    return "\n".join(lines) + "\n"


def plot_data(tree, dataset=None):
    """Per-leaf mean/difference rows for external Bland-Altman scatter plots."""
    dataset = dataset or tree.dataset
    if dataset is None:
        raise ValueError("plot data needs the dataset the tree was fitted on")
    leaf_of = tree.partition()
    rows = []
    for s in dataset.subjects:
        a = np.asarray(s.measurements_a, dtype=float)
        b = np.asarray(s.measurements_b, dtype=float)
        node = leaf_of[s.subject_id]
        if tree.design == "paired":
            for rep, ai, bi in zip(s.replicates_a, a, b):
                rows.append({"node": node, "subject": s.subject_id, "replicate": rep, "mean": (ai + bi) / 2, "difference": ai - bi})
        else:
            rows.append({
                "node": node, "subject": s.subject_id, "replicate": None,
                "mean": (a.mean() + b.mean()) / 2, "difference": a.mean() - b.mean(),
            })
    frame = pd.DataFrame(rows, columns=["node", "subject", "replicate", "mean", "difference"])
    if tree.design != "paired":
        frame = frame.drop(columns="replicate")
    return frame.sort_values(["node", "subject"], kind="mergesort")


def serialize(tree, fmt="json"):
    if fmt == "json":
        return json.dumps(TreeSchema().dump(tree), indent=2)
    if fmt == "text":
        return render_text(tree)
    if fmt == "plotdata":
        return plot_data(tree).to_csv(index=False, lineterminator="\n")
    raise ConfigError(f"unknown format '{fmt}', expected one of {FORMATS}")


def load_tree(text):
    return TreeSchema().load(json.loads(text) if isinstance(text, str) else text)
