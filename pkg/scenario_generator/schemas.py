from marshmallow import Schema, fields, post_load, validate

from measurement_data.config import DESIGNS
from scenario_generator.config import DEFAULT_M, SCENARIOS
from scenario_generator.generator import ScenarioSpec


class ScenarioSpecSchema(Schema):
    scenario = fields.String(required=True, validate=validate.OneOf(SCENARIOS))
    design = fields.String(required=True, validate=validate.OneOf(DESIGNS))
    n = fields.Integer(required=True, validate=validate.Range(min=2))
    m = fields.Integer(load_default=DEFAULT_M, validate=validate.Range(min=2))
    seed = fields.Integer(load_default=None, allow_none=True, validate=validate.Range(min=0, max=2**64 - 1))

    @post_load
    def make(self, data, **kwargs):
        return ScenarioSpec(**data)
