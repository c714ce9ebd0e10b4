"""Rateless multidimensional reconciliation for CV-QKD."""

__version__ = "0.1.0"

from .channel import ChannelParams, GaussianPair, biawgn_sample, channel_snr, simulate_gaussian_pair, transmittance
from .degree import DegreeDistribution, sample_degree, table1_distribution
from .keyrate import (
    KeyRateInputs,
    KeyRateReport,
    capacity,
    efficiency,
    finite_size_key_rate,
    holevo_bound,
    mutual_information,
    optimal_va,
    realized_rate,
    skr_vs_distance,
)
from .multidim import (
    MappingFunction,
    NormalizedVector,
    SphericalCodeword,
    apply_mapping,
    make_mapping,
    normalize,
    to_spherical,
    virtual_llr,
    virtual_llr_norm,
)
from .precode import Precode, default_precode
from .raptor import DecodeResult, RaptorBlockPlan, bp_decode, channel_llr, check_code, lt_encode
from .session import (
    SessionConfig,
    SessionOutcome,
    Transcript,
    measure_efficiency,
    n_val,
    replay_session,
    run_biawgn_session,
    run_reconciliation,
    select_distribution,
)
