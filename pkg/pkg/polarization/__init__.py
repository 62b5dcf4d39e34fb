from .core import (
    DEFAULT_SCAN_RESOLUTION,
    coincidence_grid,
    coincidence_pairs,
    coincidence_prob,
    fringe_scan,
    fringe_visibility,
    single_grid,
    single_prob,
)
