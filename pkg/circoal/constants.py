"""
Default values for simulations, series truncation and statistical gating.
"""

# coalescing engine
DEFAULT_DT = 1e-5
SMOKE_DT = 1e-4
SAFETY_HORIZON = 100.0

# stepping-stone entrance law
DEFAULT_EPS = 1e-3
DEFAULT_GRID_SIZE = 512

# series truncation
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_TERMS = 10_000

# statistical gating
N_SIGMA = 3.0
KS_THRESHOLD = 0.02
TV_SCALE = 3.0
LOW_POWER_REPS = 1000
KAPPA_BINS = 20
CHI2_ALPHA = 0.01
PRINTED_PREFACTOR_SIGMAS = 20.0
GRID_ALLOWANCE_LIMIT = 0.01
MAX_SCAN_CONFIGURATIONS = 100_000

# seeding and parallelism
CHUNK_SIZE = 1024
SEED_ENV_VAR = "CIRCOAL_SEED"
DEFAULT_SEED = 20240601

# closed-form moments of the fixation time
MEAN_FIXATION = 1.0 / 6.0
VARIANCE_FIXATION = 7.0 / 180.0 - 1.0 / 36.0
