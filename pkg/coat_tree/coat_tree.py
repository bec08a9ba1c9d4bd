import json
import traceback

from flask import jsonify, request
from flask_smorest import Blueprint
from marshmallow import ValidationError

from common import CoatError
from coat_tree.schemas import FitRequestSchema, PredictRequestSchema, TreeSchema
from coat_tree.tree import fit, predict_subgroup, two_sample_ba_test
from coat_tree.utils import load_tree, render_text, tree_to_frame
from measurement_data.measurement_data import parse_long_csv, validate
from measurement_data.utils import parse_covariate_schema

bp = Blueprint("coat", __name__,)


def _load_request(schema):
    return schema.load(request.get_json(silent=True) or {})


def _dataset_and_config(data):
    """Split a FitRequestSchema payload into a Dataset and a FitConfig."""
    config = FitRequestSchema.config_from(data)
    schema = parse_covariate_schema(data["covariates"])
    dataset = parse_long_csv(data["csv"], data["design"], schema)
    return dataset, config


@bp.get('/')
def index():
    return jsonify({"status": "ok", "endpoint": "coat"}), 200


@bp.post('/fit')
def fit_tree():
    try:
        data = _load_request(FitRequestSchema())
        dataset, config = _dataset_and_config(data)
        warnings = validate(dataset, config.minsize)
        tree = fit(dataset, config)
        frame = tree_to_frame(tree)
        return jsonify({
            "status": "success",
            "tree": TreeSchema().dump(tree),
            "text": render_text(tree),
            "nodes": json.loads(frame.to_json(orient="records")),
            "warnings": warnings,
        }), 200
    except ValidationError as e:
        return jsonify({"status": "fail", "error": e.messages}), 400
    except CoatError as e:
        return jsonify({"status": "fail", "error": str(e)}), 400
    except Exception as e:
        traceback.print_exc()
        return jsonify({"status": "fail", "error": str(e)}), 500


@bp.post('/test2')
def two_sample():
    try:
        data = _load_request(FitRequestSchema())
        if not data.get("group"):
            return jsonify({"status": "fail", "error": "field 'group' is required"}), 400
        dataset, config = _dataset_and_config(data)
        result = two_sample_ba_test(dataset, data["group"], config)
        return jsonify({"status": "success", **result.to_dict()}), 200
    except ValidationError as e:
        return jsonify({"status": "fail", "error": e.messages}), 400
    except CoatError as e:
        return jsonify({"status": "fail", "error": str(e)}), 400
    except Exception as e:
        traceback.print_exc()
        return jsonify({"status": "fail", "error": str(e)}), 500


@bp.post('/predict')
def predict():
    try:
        data = _load_request(PredictRequestSchema())
        tree = load_tree(data["tree"])
        node_id = predict_subgroup(tree, data["covariates"])
        node = tree.node(node_id)
        estimate = node.estimate.to_dict() if node.estimate else None
        return jsonify({"status": "success", "node": node_id, "estimate": estimate}), 200
    except ValidationError as e:
        return jsonify({"status": "fail", "error": e.messages}), 400
    except CoatError as e:
        return jsonify({"status": "fail", "error": str(e)}), 400
    except Exception as e:
        traceback.print_exc()
        return jsonify({"status": "fail", "error": str(e)}), 500
