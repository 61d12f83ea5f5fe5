"""Two-mode boson states, superselection rules and spin-squeezing entanglement tests."""
from .errors import BosewitError, ConfigurationError, NumericalValidationError, UsageError
from .fock import (
    DensityOperator,
    FockSpace,
    ModeOperator,
    SingleModeDensity,
    StateVector,
    annihilator,
    build_space,
    creator,
    expectation,
    monomial,
    number_op,
    partial_trace,
    sector_space,
    variance,
)
from .multisite import MultiSiteState, SiteState, css_multisite, one_axis_twist_multisite, xi2_multisite
from .spin import SpinMoments, principal_frame, schwinger_ops, sector_spin_moments, spin_moments
from .states import (
    RelativePhaseSpec,
    SeparableEnsemble,
    SSRMode,
    assemble_separable,
    coherent_product,
    css_state,
    fock_state,
    noon_state,
    one_axis_twist,
    random_separable,
    relative_phase_state,
    ssr_dephase_global,
    ssr_dephase_local,
)
from .witnesses import ReportConfig, Verdict, WitnessResult, full_report

__version__ = "0.1.0"

__all__ = [
    "BosewitError",
    "ConfigurationError",
    "NumericalValidationError",
    "UsageError",
    "DensityOperator",
    "FockSpace",
    "ModeOperator",
    "SingleModeDensity",
    "StateVector",
    "annihilator",
    "build_space",
    "creator",
    "expectation",
    "monomial",
    "number_op",
    "partial_trace",
    "sector_space",
    "variance",
    "MultiSiteState",
    "SiteState",
    "css_multisite",
    "one_axis_twist_multisite",
    "xi2_multisite",
    "SpinMoments",
    "principal_frame",
    "schwinger_ops",
    "sector_spin_moments",
    "spin_moments",
    "RelativePhaseSpec",
    "SeparableEnsemble",
    "SSRMode",
    "assemble_separable",
    "coherent_product",
    "css_state",
    "fock_state",
    "noon_state",
    "one_axis_twist",
    "random_separable",
    "relative_phase_state",
    "ssr_dephase_global",
    "ssr_dephase_local",
    "ReportConfig",
    "Verdict",
    "WitnessResult",
    "full_report",
]
