# Configuration constants for ergodic-eki

# Result bundle file names (relative to the output directory)
BUNDLE_FILES = {
    "observation": "observation.json",
    "history": "history.jsonl",
    "final_ensemble": "final_ensemble.csv",
    "data_comparison": "data_comparison.csv",
    "summary": "summary.json",
    "trajectory_truth": "trajectory_truth.csv",
    "trajectory_fitted": "trajectory_fitted.csv",
}

# Sub-directories of a result bundle
DIRECTORIES = {
    "histograms": "histograms",
    "acf": "acf",
    "functions": "functions",
}

# Default solver time steps per model family (model time units)
DEFAULT_DT = {
    "lorenz63": 1e-3,
    "lorenz96": 1e-3,
    "enso": 0.01,     # months
    "butane": 1e-6,   # ns
}

# Integration settings
INTEGRATION_DEFAULTS = {
    "block_steps": 4096,   # increments drawn per RNG call
    "record_every": 1,
}

# Statistics settings
STATISTICS_DEFAULTS = {
    "burn_in_fraction": 0.1,
    "burn_in_time": 10.0,
    "welch_segments": 8,
    "psd_skip_bins": 2,
    "psd_max_fraction_of_nyquist": 0.5,
    "gamma_jitter": 1e-8,
    "gamma_batches": 20,
}

# Ensemble Kalman inversion settings
EKI_DEFAULTS = {
    "max_gens": 30,
    "min_ensemble_size": 10,
    "perturb": True,
    "jitter": 1e-8,
    "n_jobs": 1,
    "discrepancy_tau": 1.0,
}

# Function parameterization settings
FUNCPARAM_DEFAULTS = {
    "gram_jitter": 1e-10,
    "node_padding": 0.1,
    "basis_width": 0.5,
    "basis_centers": 9,
}

# Runner settings
RUNNER_DEFAULTS = {
    "validation_factor": 10.0,
    "histogram_bins": 50,
    "function_grid_points": 101,
    "trajectory_dump_every": 0,   # 0 disables trajectory dumps
}

# CLI exit codes
EXIT_CODES = {
    "ok": 0,
    "config": 2,
    "data": 3,
    "solver": 4,
}

# Bundle viewer settings
APP_CONFIG = {
    "page_title": "ergodic-eki results",
    "layout": "wide",
}

# Viewer pages, in sidebar order
PAGES = ["Data fit", "Invariant measures", "Autocorrelation", "Functions", "History"]
