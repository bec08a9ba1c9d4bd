import os

# eigenvalues <= SPECTRAL_TOL * largest eigenvalue count as zero
SPECTRAL_TOL = float(os.getenv("COAT_SPECTRAL_TOL", 1e-10))

# exhaustive binary partitions: 2**(levels-1) - 1 candidates
MAX_NOMINAL_LEVELS = int(os.getenv("COAT_MAX_NOMINAL_LEVELS", 6))
