"""URLLC/eMBB slicing for visuo-haptic VR under OMA and NOMA."""

from .analytic import (
    CMode,
    NetworkParams,
    NomaPowerSplit,
    OmaBandwidthSplit,
    P2Mode,
    coverage,
    coverage_bound,
    coverage_exact,
    inverse_coverage,
    inverse_coverage_exact,
    inverse_threshold_G,
    noma_p1,
    noma_p2,
    noma_p2_exact,
    rate_noma,
    rate_oma,
)
from .errors import ConfigError, ConvergenceError, InfeasibleError, SlicingError, ThresholdCeilingError
from .montecarlo import McConfig, McEstimate, SicOrder
from .optimizer import ProblemP1, Scheme, Search, SliceDesign, compare_sic_orders, crossover_theta, solve_p1
from .perception import JndTargets, eta1_for_jnd, eta2_feasible_range, integrated_jnd

__version__ = "0.1.0"

__all__ = [
    "CMode",
    "ConfigError",
    "ConvergenceError",
    "InfeasibleError",
    "JndTargets",
    "McConfig",
    "McEstimate",
    "NetworkParams",
    "NomaPowerSplit",
    "OmaBandwidthSplit",
    "P2Mode",
    "ProblemP1",
    "Scheme",
    "Search",
    "SicOrder",
    "SliceDesign",
    "SlicingError",
    "ThresholdCeilingError",
    "compare_sic_orders",
    "coverage",
    "coverage_bound",
    "coverage_exact",
    "crossover_theta",
    "eta1_for_jnd",
    "eta2_feasible_range",
    "integrated_jnd",
    "inverse_coverage",
    "inverse_coverage_exact",
    "inverse_threshold_G",
    "noma_p1",
    "noma_p2",
    "noma_p2_exact",
    "rate_noma",
    "rate_oma",
    "solve_p1",
]
