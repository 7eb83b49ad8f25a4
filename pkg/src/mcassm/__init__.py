"""Multipath-aggregation spatial scattering modulation (MCA-SSM).

Channel construction, whitened effective channels, max-min-distance design of
the aggregation matrix, ML detection with Monte-Carlo BER, and union-bound
error analysis.
"""

from .analysis import (
    AbepCurve,
    ScenarioSweep,
    ed_sweep,
    exact_min_ed,
    pairwise_ep,
    q_function,
    scenario_sweep,
    snr_at_target,
    uub_abep,
    uub_curve,
)
from .array_processing import EffectiveChannel, effective_channel
from .channel import (
    ArrayConfig,
    ChannelScenario,
    MultipathComponent,
    build_channel_matrix,
    load_link_records,
    reference_scenario,
    steering_vector,
    synth_ensemble,
    synth_scenario,
)
from .constellations import Constellation, Family, build_sm, gen_constellation, min_distance, parse_constellation
from .design import (
    BeamVectorBook,
    MCADesign,
    assemble_design,
    baseline_gssm,
    baseline_ssm,
    build_candidates,
    design_upsilon,
    optimize,
    prune_dominated,
    select_optimum,
    solve_iota_candidates,
)
from .link import LinkConfig, SimResult, map_bits, ml_detect, ml_detect_reduced, run_monte_carlo

__version__ = "0.1.0"
