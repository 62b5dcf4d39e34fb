from .diffraction import (
    check_fraunhofer,
    coincidence_profile,
    dbb_density,
    dbb_joint_pattern,
    fresnel_numbers,
    incoherent_sum,
    joint_density,
    l1_distance,
    singles_visibility,
    slit_amplitude,
    slit_amplitudes,
    sqm_joint_pattern,
    sqm_singles_pattern,
)
from .fitting import chi_square_compare, estimate_period, synthetic_counts
