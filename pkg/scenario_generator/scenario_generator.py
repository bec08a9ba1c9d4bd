import traceback

from flask import jsonify, request
from flask_smorest import Blueprint
from marshmallow import ValidationError

from common import CoatError
from scenario_generator.generator import generate
from scenario_generator.schemas import ScenarioSpecSchema

bp = Blueprint("scenario", __name__,)


@bp.get('/')
def index():
    return jsonify({"status": "ok", "endpoint": "scenario"}), 200


@bp.post('/simulate')
def simulate():
    try:
        spec = ScenarioSpecSchema().load(request.get_json(silent=True) or {})
        dataset, truth = generate(spec)
        return jsonify({
            "status": "success",
            "seed": spec.seed,
            "data": dataset.to_long_csv(),
            "truth": truth.to_csv(),
        }), 200
    except ValidationError as e:
        return jsonify({"status": "fail", "error": e.messages}), 400
    except CoatError as e:
        return jsonify({"status": "fail", "error": str(e)}), 400
    except Exception as e:
        traceback.print_exc()
        return jsonify({"status": "fail", "error": str(e)}), 500
