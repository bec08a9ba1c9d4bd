from marshmallow import EXCLUDE, Schema, ValidationError, fields, post_load, pre_dump, validate, validates_schema

from common import ConfigError
from ba_estimators.ba_estimators import BAEstimate
from ba_estimators.config import DEFAULT_VARIANCE_MODE, VARIANCE_MODES
from coat_tree.config import DEFAULT_ALPHA, DEFAULT_MINSIZE, DEFAULT_MINSPLIT, OUTCOMES
from coat_tree.models import CoatNode, CoatTree, FitConfig
from measurement_data.config import COVARIATE_KINDS, DESIGNS
from measurement_data.measurement_data import CovariateSpec


class FitConfigSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    alpha = fields.Float(load_default=DEFAULT_ALPHA, validate=validate.Range(min=0, max=1, min_inclusive=False))
    minsize = fields.Integer(load_default=DEFAULT_MINSIZE, validate=validate.Range(min=2))
    minsplit = fields.Integer(load_default=None, allow_none=True, validate=validate.Range(min=2))
    maxdepth = fields.Integer(load_default=None, allow_none=True, validate=validate.Range(min=1))
    design = fields.String(load_default=None, allow_none=True, validate=validate.OneOf(DESIGNS))
    variance_mode = fields.String(load_default=DEFAULT_VARIANCE_MODE, validate=validate.OneOf(VARIANCE_MODES))
    outcome = fields.String(load_default="ba", validate=validate.OneOf(OUTCOMES))
    include_mean_covariate = fields.Boolean(load_default=False)

    @validates_schema
    def check_minsplit(self, data, **kwargs):
        minsplit = data.get("minsplit")
        if minsplit is not None and minsplit < 2 * data["minsize"]:
            raise ValidationError(f"minsplit ({minsplit}) must be >= 2*minsize ({2 * data['minsize']})", "minsplit")

    @post_load
    def make(self, data, **kwargs):
        if data.get("minsplit") is None:
            data["minsplit"] = max(DEFAULT_MINSPLIT, 2 * data["minsize"])
        return FitConfig(**data)


def make_config(**overrides):
    """Validated FitConfig from keyword overrides; raises ConfigError."""
    try:
        return FitConfigSchema().load(overrides)
    except ValidationError as e:
        raise ConfigError(f"invalid fit configuration: {e.messages}") from None


class CovariateSpecSchema(Schema):
    name = fields.String(required=True)
    kind = fields.String(required=True, validate=validate.OneOf(COVARIATE_KINDS))
    levels = fields.List(fields.String(), load_default=list)

    @post_load
    def make(self, data, **kwargs):
        return CovariateSpec(data["name"], data["kind"], tuple(data["levels"]))


class EstimateSchema(Schema):
    bias = fields.Float(required=True)
    var_between = fields.Float(required=True)
    var_within_a = fields.Float(allow_none=True)
    var_within_b = fields.Float(allow_none=True)
    var_within = fields.Float(allow_none=True)
    var_total = fields.Float(required=True)
    var_total_raw = fields.Float(allow_none=True)
    loa = fields.List(fields.Float(), required=True)
    clamped = fields.Boolean(required=True)
    n_subjects = fields.Integer(required=True)

    @pre_dump
    def flatten(self, estimate, **kwargs):
        data = estimate.to_dict()
        data["loa"] = [estimate.loa_lower, estimate.loa_upper]
        return data

    @post_load
    def make(self, data, **kwargs):
        lower, upper = data.pop("loa")
        return BAEstimate(loa_lower=lower, loa_upper=upper, **data)


class NodeSchema(Schema):
    class Meta:
        unknown = EXCLUDE
        ordered = True

    id = fields.Integer(required=True)
    kind = fields.String(dump_only=True)
    depth = fields.Integer(required=True)
    n = fields.Integer(attribute="n_subjects", dump_only=True)
    split = fields.Dict(allow_none=True, load_default=None)
    p_adjusted = fields.Float(allow_none=True, load_default=None)
    statistic = fields.Float(allow_none=True, load_default=None)
    df = fields.Integer(allow_none=True, load_default=None)
    p_table = fields.Dict(load_default=dict)
    estimate = fields.Nested(EstimateSchema, allow_none=True, load_default=None)
    subject_ids = fields.List(fields.String(), required=True)
    children = fields.List(fields.Nested(lambda: NodeSchema()), load_default=list)

    @post_load
    def make(self, data, **kwargs):
        return CoatNode(**data)


class TreeSchema(Schema):
    class Meta:
        unknown = EXCLUDE
        ordered = True

    config = fields.Nested(FitConfigSchema, required=True)
    design = fields.String(required=True, validate=validate.OneOf(DESIGNS))
    schema = fields.List(fields.Nested(CovariateSpecSchema), attribute="covariate_schema", required=True)
    diagnostics = fields.Dict(load_default=dict)
    root = fields.Nested(NodeSchema, required=True)

    @post_load
    def make(self, data, **kwargs):
        data["covariate_schema"] = tuple(data["covariate_schema"])
        return CoatTree(**data)


class FitRequestSchema(FitConfigSchema):
    """Body of the HTTP fit and two-sample routes."""

    csv = fields.String(required=True)
    design = fields.String(required=True, validate=validate.OneOf(DESIGNS))
    covariates = fields.String(load_default="")
    group = fields.String(load_default=None, allow_none=True)

    @post_load
    def make(self, data, **kwargs):
        if data.get("minsplit") is None:
            data["minsplit"] = max(DEFAULT_MINSPLIT, 2 * data["minsize"])
        return data

    @staticmethod
    def config_from(data):
        return FitConfig(**{key: data[key] for key in FitConfig.__dataclass_fields__ if key in data})


class PredictRequestSchema(Schema):
    tree = fields.Dict(required=True)
    covariates = fields.Dict(required=True)
