from .ch import ChObjective, ch_counts, ch_strict, ch_substituted, evaluate, f_for_angle, restricted_optimum
from .loophole import loophole_map, map_row
from .optimizer import (
    canonical_angles,
    ch_optimize,
    critical_efficiency,
    golden_section_max,
    grid_search,
    max_ch,
    refine,
)
