import os

DEFAULT_REPS = int(os.getenv("COAT_REPS", 1000))
DEFAULT_THREADS = int(os.getenv("COAT_THREADS", 1))

# model name -> transformation fed to the tree
MODELS = {"coat": "ba", "ctree_mean": "mean_only"}

N_GRID = (50, 75, 100, 125, 150, 175, 200, 225, 250, 275, 300)
CI_LEVEL = 0.95

SUMMARY_COLUMNS = [
    "scenario", "design", "model", "n", "reps", "rate", "rate_ci_lo", "rate_ci_hi",
    "mean_ari", "ari_se", "split_rate", "errors",
]
