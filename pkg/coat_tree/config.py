import os

DEFAULT_ALPHA = float(os.getenv("COAT_ALPHA", 0.05))
DEFAULT_MINSIZE = int(os.getenv("COAT_MINSIZE", 10))
DEFAULT_MINSPLIT = int(os.getenv("COAT_MINSPLIT", 20))

# between component inside the tested h2; node estimates follow FitConfig.variance_mode
TEST_VARIANCE_MODE = os.getenv("COAT_TEST_VARIANCE_MODE", "literal")

OUTCOMES = ("ba", "mean_only")
FORMATS = ("json", "text", "plotdata")

# decimals in the text rendering
TEXT_DIGITS = int(os.getenv("COAT_TEXT_DIGITS", 4))
