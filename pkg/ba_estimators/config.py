import os

# 95% limits of agreement
LOA_Z = 1.96

VARIANCE_MODES = ("msb", "literal")
DEFAULT_VARIANCE_MODE = os.getenv("COAT_VARIANCE_MODE", "msb")
