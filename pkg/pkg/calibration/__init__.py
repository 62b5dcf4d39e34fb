from .montecarlo import estimate, estimator_bias_scan, seed_batch, simulate_calibration, simulate_counts
