import os

SCENARIOS = ("null", "stump_bias", "stump_loa", "tree")
DEFAULT_M = int(os.getenv("COAT_SIM_REPLICATES", 3))

COVARIATE_NAMES = ("X1", "X2", "X3", "X4", "X5")
COVARIATE_MEANS = (20.0, 100.0, 5000.0, 0.0, 1000.0)
COVARIATE_SDS = (4.0, 20.0, 100.0, 1.0, 50.0)

# effect thresholds on X1 and X2
Q1 = 20.0
Q2 = 100.0

NULL_BIAS = 16.0
NULL_VAR = 439.0
# between : within A : within B
VARIANCE_RATIO = (322.0, 36.0, 81.0)

TRUE_LEVEL_MEAN = 100.0
TRUE_LEVEL_SD = 15.0
PAIR_EFFECT_VAR = 6.25
