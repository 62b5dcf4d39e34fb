from .eavesdrop import PUBLISHED_RATIOS, disturbance_ratio
from .protocol import eve_sweep, run_protocol, run_single_channel, single_channel_baseline
from .states import (
    intercept_table,
    measurement_distribution,
    pair_table,
    phase_basis,
    phase_pair,
    pol_basis,
    pol_pair,
    pump_amplitudes,
)
