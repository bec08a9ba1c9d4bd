"""Long-format repeated-measurement ingestion.

A dataset is a collection of subjects, each with replicate measurements of
two methods (A and B) and one value per declared covariate. Both replicate
designs share one file format: ``subject,method,replicate,value,<covariates>``.
"""
import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from common import ConsistencyError, PairingError, ParseError, SchemaError
from measurement_data.config import (
    COVARIATE_KINDS, DESIGNS, MEAN_COVARIATE, METHOD_COLUMN, METHODS, REPLICATE_COLUMN,
    REQUIRED_COLUMNS, SUBJECT_COLUMN, VALUE_COLUMN,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CovariateSpec:
    name: str
    kind: str
    levels: tuple = ()

    def __post_init__(self):
        if self.kind not in COVARIATE_KINDS:
            raise SchemaError(f"covariate {self.name}: unknown kind '{self.kind}', expected one of {COVARIATE_KINDS}")
        if self.kind == "ordinal" and not self.levels:
            raise SchemaError(f"ordinal covariate {self.name} needs its levels in order, e.g. {self.name}:ordinal=low|mid|high")

    @property
    def categorical(self):
        return self.kind != "numeric"


@dataclass(frozen=True)
class MeasurementRecord:
    subject_id: str
    method: str
    replicate_id: int
    value: float


@dataclass(frozen=True)
class SubjectSeries:
    subject_id: str
    measurements_a: tuple
    measurements_b: tuple
    covariates: dict = field(default_factory=dict, compare=True, hash=False)
    replicates_a: tuple = ()
    replicates_b: tuple = ()

    @property
    def m_a(self):
        return len(self.measurements_a)

    @property
    def m_b(self):
        return len(self.measurements_b)

    def differences(self):
        """Per-pair differences a_im - b_im (paired design only)."""
        return np.asarray(self.measurements_a, dtype=float) - np.asarray(self.measurements_b, dtype=float)

    def records(self):
        for rep, value in zip(self.replicates_a, self.measurements_a):
            yield MeasurementRecord(self.subject_id, "A", rep, value)
        for rep, value in zip(self.replicates_b, self.measurements_b):
            yield MeasurementRecord(self.subject_id, "B", rep, value)


@dataclass(frozen=True)
class Dataset:
    design: str
    subjects: tuple
    covariate_schema: tuple = ()

    @property
    def n(self):
        return len(self.subjects)

    @property
    def subject_ids(self):
        return [s.subject_id for s in self.subjects]

    @property
    def covariate_names(self):
        return [c.name for c in self.covariate_schema]

    def covariate(self, name):
        for spec in self.covariate_schema:
            if spec.name == name:
                return spec
        raise SchemaError(f"unknown covariate '{name}'")

    def covariate_values(self, name):
        spec = self.covariate(name)
        values = [s.covariates[name] for s in self.subjects]
        return np.asarray(values, dtype=float if not spec.categorical else object)

    def subset(self, subject_ids):
        keep = set(subject_ids)
        return replace(self, subjects=tuple(s for s in self.subjects if s.subject_id in keep))

    def restrict_covariates(self, names):
        schema = tuple(self.covariate(name) for name in names)
        return replace(self, covariate_schema=schema)

    def with_mean_covariate(self):
        """Append the per-subject mean of all measurements as a numeric covariate."""
        if MEAN_COVARIATE in self.covariate_names:
            return self
        subjects = []
        for s in self.subjects:
            mean_level = (np.mean(s.measurements_a) + np.mean(s.measurements_b)) / 2.0
            covariates = dict(s.covariates)
            covariates[MEAN_COVARIATE] = float(mean_level)
            subjects.append(replace(s, covariates=covariates))
        schema = self.covariate_schema + (CovariateSpec(MEAN_COVARIATE, "numeric"),)
        return replace(self, subjects=tuple(subjects), covariate_schema=schema)

    def to_frame(self):
        rows = []
        for s in self.subjects:
            for rec in s.records():
                row = {
                    SUBJECT_COLUMN: rec.subject_id, METHOD_COLUMN: rec.method,
                    REPLICATE_COLUMN: rec.replicate_id, VALUE_COLUMN: rec.value,
                }
                row.update({c.name: s.covariates[c.name] for c in self.covariate_schema})
                rows.append(row)
        return pd.DataFrame(rows, columns=list(REQUIRED_COLUMNS) + self.covariate_names)

    def to_long_csv(self):
        return self.to_frame().to_csv(index=False, lineterminator="\n", float_format="%.17g")


def _read_frame(text):
    source = io.StringIO(text) if isinstance(text, str) else text
    try:
        return pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise SchemaError("input has no header row") from e


def _parse_number(raw, row, what):
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"{what} '{raw}' is not a number", row=row) from None
    if not np.isfinite(value):
        raise ParseError(f"{what} '{raw}' is not finite", row=row)
    return value


def _covariate_value(spec, raw, row):
    if raw == "":
        raise ParseError(f"empty value for covariate {spec.name}", row=row)
    if spec.kind == "numeric":
        return _parse_number(raw, row, f"covariate {spec.name}")
    if spec.levels and raw not in spec.levels:
        raise ParseError(f"covariate {spec.name}: level '{raw}' not in declared levels {list(spec.levels)}", row=row)
    return raw


def _finalize_schema(schema, subjects):
    """Fill in observed level sets for binary and nominal covariates declared without levels."""
    finalized = []
    for spec in schema:
        if spec.categorical and not spec.levels:
            observed = sorted({s.covariates[spec.name] for s in subjects})
            spec = replace(spec, levels=tuple(observed))
        if spec.kind == "binary" and len(spec.levels) > 2:
            raise SchemaError(f"covariate {spec.name} declared binary but has levels {list(spec.levels)}")
        finalized.append(spec)
    return tuple(finalized)


def parse_long_csv(text, design, covariate_schema=()):
    """Parse long-format CSV text (or a file object) into a Dataset."""
    if design not in DESIGNS:
        raise SchemaError(f"unknown design '{design}', expected one of {DESIGNS}")
    frame = _read_frame(text)
    frame.columns = [c.strip() for c in frame.columns]
    for column in list(REQUIRED_COLUMNS) + [c.name for c in covariate_schema]:
        if column not in frame.columns:
            raise SchemaError(f"missing column '{column}'")

    by_subject = {}
    seen = set()
    for idx, rec in enumerate(frame.to_dict("records")):
        row = idx + 2  # header is line 1
        subject = rec[SUBJECT_COLUMN].strip()
        if not subject:
            raise ParseError("empty subject", row=row)
        method = rec[METHOD_COLUMN].strip().upper()
        if method not in METHODS:
            raise ParseError(f"method '{rec[METHOD_COLUMN]}' is not A or B", row=row)
        try:
            replicate = int(rec[REPLICATE_COLUMN])
        except ValueError:
            raise ParseError(f"replicate '{rec[REPLICATE_COLUMN]}' is not an integer", row=row) from None
        if replicate < 1:
            raise ParseError(f"replicate {replicate} must be >= 1", row=row)
        if rec[VALUE_COLUMN].strip() == "":
            raise ParseError("empty value", row=row)
        value = _parse_number(rec[VALUE_COLUMN], row, "value")

        key = (subject, method, replicate)
        if key in seen:
            raise ConsistencyError(f"duplicate measurement for subject {subject}, method {method}, replicate {replicate}")
        seen.add(key)

        entry = by_subject.setdefault(subject, {"A": {}, "B": {}, "covariates": {}})
        entry[method][replicate] = value
        for spec in covariate_schema:
            cov = _covariate_value(spec, rec[spec.name].strip(), row)
            previous = entry["covariates"].setdefault(spec.name, cov)
            if previous != cov:
                raise ConsistencyError(f"covariate {spec.name} is not constant within subject {subject}")

    subjects = []
    for subject in sorted(by_subject):
        entry = by_subject[subject]
        reps_a, reps_b = sorted(entry["A"]), sorted(entry["B"])
        if not reps_a or not reps_b:
            missing = "A" if not reps_a else "B"
            raise ConsistencyError(f"subject {subject} has no measurements for method {missing}")
        if design == "paired" and reps_a != reps_b:
            unmatched = sorted(set(reps_a) ^ set(reps_b))[0]
            raise PairingError(f"unmatched pair for subject {subject}, replicate {unmatched}")
        subjects.append(SubjectSeries(
            subject_id=subject,
            measurements_a=tuple(entry["A"][r] for r in reps_a),
            measurements_b=tuple(entry["B"][r] for r in reps_b),
            covariates=entry["covariates"],
            replicates_a=tuple(reps_a),
            replicates_b=tuple(reps_b),
        ))

    schema = _finalize_schema(tuple(covariate_schema), subjects)
    logger.debug("parsed %d rows into %d subjects (%s design)", len(frame), len(subjects), design)
    return Dataset(design=design, subjects=tuple(subjects), covariate_schema=schema)


def validate(dataset, minsize=None):
    """Return non-fatal warnings about a parsed dataset."""
    warnings = []
    if dataset.n < 2:
        warnings.append(f"only {dataset.n} subject(s): agreement cannot be estimated")
    for s in dataset.subjects:
        if dataset.design == "paired":
            if s.m_a == 1:
                warnings.append(f"zero df for paired differences, subject {s.subject_id}")
            continue
        if s.m_a == 1:
            warnings.append(f"zero df for method A, subject {s.subject_id}")
        if s.m_b == 1:
            warnings.append(f"zero df for method B, subject {s.subject_id}")
    for spec in dataset.covariate_schema:
        observed = {s.covariates[spec.name] for s in dataset.subjects}
        if len(observed) < 2:
            warnings.append(f"constant covariate {spec.name}: untestable")
    if minsize is not None and dataset.n < 2 * minsize:
        warnings.append(f"n={dataset.n} < 2*minsize={2 * minsize}: tree can never split")
    for message in warnings:
        logger.warning(message)
    return warnings
