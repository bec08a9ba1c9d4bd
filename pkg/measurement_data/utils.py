from common import SchemaError
from measurement_data.measurement_data import CovariateSpec


def parse_covariate_schema(text):
    """Parse ``name:kind[=lvl1|lvl2...]`` entries separated by commas.

    >>> parse_covariate_schema("sex:binary,age:numeric")
    (CovariateSpec(name='sex', kind='binary', levels=()), CovariateSpec(name='age', kind='numeric', levels=()))
    """
    if not text:
        return ()
    schema = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise SchemaError(f"covariate '{item}' must be given as name:kind")
        name, kind = item.split(":", 1)
        levels = ()
        if "=" in kind:
            kind, raw_levels = kind.split("=", 1)
            levels = tuple(level.strip() for level in raw_levels.split("|") if level.strip())
        schema.append(CovariateSpec(name.strip(), kind.strip().lower(), levels))
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate covariate names in {names}")
    return tuple(schema)


def schema_to_text(schema):
    parts = []
    for spec in schema:
        part = f"{spec.name}:{spec.kind}"
        if spec.levels and spec.kind == "ordinal":
            part += "=" + "|".join(spec.levels)
        parts.append(part)
    return ",".join(parts)
