import os

SUBJECT_COLUMN = os.getenv("COAT_SUBJECT_COLUMN", "subject")
METHOD_COLUMN = os.getenv("COAT_METHOD_COLUMN", "method")
REPLICATE_COLUMN = os.getenv("COAT_REPLICATE_COLUMN", "replicate")
VALUE_COLUMN = os.getenv("COAT_VALUE_COLUMN", "value")

REQUIRED_COLUMNS = (SUBJECT_COLUMN, METHOD_COLUMN, REPLICATE_COLUMN, VALUE_COLUMN)

DESIGNS = ("unpaired", "paired")
COVARIATE_KINDS = ("numeric", "binary", "nominal", "ordinal")
METHODS = ("A", "B")

# name of the derived covariate appended by include_mean_covariate
MEAN_COVARIATE = "mean_measurement"
