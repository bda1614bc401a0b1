"""Soft and hard MIMO detectors."""

from .analysis import default_delta_d, exclusion_probability_bound, max_complexity_bound
from .dare import CandidateList, DareConfig, dare_detect, reliability_from_candidates
from .linear import (
    LmmseFilter,
    SicFilter,
    SingularChannelError,
    lmmse_apply,
    lmmse_detect,
    lmmse_filter,
    mmse_sic_apply,
    mmse_sic_detect,
    mmse_sic_filter,
    scalar_maxlog_llr,
)
from .oracles import (
    MAX_ENUMERATION,
    EnumerationTooLarge,
    maxlog_llr_exact,
    ml_detect,
    squared_distance_grid,
)

__all__ = [
    "CandidateList",
    "DareConfig",
    "EnumerationTooLarge",
    "LmmseFilter",
    "MAX_ENUMERATION",
    "SicFilter",
    "SingularChannelError",
    "dare_detect",
    "default_delta_d",
    "exclusion_probability_bound",
    "lmmse_apply",
    "lmmse_detect",
    "lmmse_filter",
    "max_complexity_bound",
    "maxlog_llr_exact",
    "ml_detect",
    "mmse_sic_apply",
    "mmse_sic_detect",
    "mmse_sic_filter",
    "reliability_from_candidates",
    "scalar_maxlog_llr",
    "squared_distance_grid",
]
