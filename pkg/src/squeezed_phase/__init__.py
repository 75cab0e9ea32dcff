"""Adaptive phase estimation with squeezed vacuum probes.

Gaussian-state formulas, Fisher informations, measurement samplers,
maximum-likelihood estimators, adaptive strategies with Monte Carlo
campaigns, and the statistics used to assess them.
"""
from .config import CampaignSpec, ConfigError, dump_config, parse_config, preset
from .engine import (
    AdaptiveTrace,
    CampaignResult,
    StepRecord,
    StrategyConfig,
    interior_grid,
    run_aqse_homodyne,
    run_campaign,
    run_chh,
    run_nonadaptive_homodyne,
    run_strategy,
    run_two_step,
)
from .estimation import (
    EstimateResult,
    FlatLikelihoodError,
    golden_section_max,
    loglik_heterodyne,
    loglik_homodyne,
    mle_heterodyne_closed_form,
    mle_homodyne_closed_form,
    mle_homodyne_truncated,
    mle_numeric,
)
from .fisher import (
    FisherReport,
    QuadratureError,
    conditional_fisher_lo_noise,
    conditional_fisher_state_prep,
    fisher_heterodyne,
    fisher_homodyne,
    fisher_homodyne_lossy,
    fisher_homodyne_lossy_max,
    fisher_report,
    qfi_lossy,
    qfi_squeezed_vacuum,
    snl_bound,
)
from .gaussian import (
    SqueezedProbe,
    lossy_optimal_phase,
    lossy_quadrature_variance,
    mean_photon_number,
    optimal_phase,
    optimal_squeezing,
    quadrature_variance,
    wrap_phase,
)
from .measurements import (
    HeterodyneBatch,
    HomodyneBatch,
    RngStream,
    sample_heterodyne,
    sample_homodyne,
    write_outcome_dump,
)
from .stats import (
    EstimateBatch,
    MomentReport,
    anderson_darling_normal,
    averaged_nonstationary_prob,
    bhattacharyya_heterodyne,
    bhattacharyya_homodyne,
    chi2_cdf,
    chi2_sf,
    fisher_combine,
    holevo_variance,
    moment_report,
    nonstationary_prob,
    regularized_gamma,
    stationary_point_prob,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveTrace", "CampaignResult", "CampaignSpec", "ConfigError", "EstimateBatch",
    "EstimateResult", "FisherReport", "FlatLikelihoodError", "HeterodyneBatch", "HomodyneBatch",
    "MomentReport", "QuadratureError", "RngStream", "SqueezedProbe", "StepRecord", "StrategyConfig",
    "anderson_darling_normal", "averaged_nonstationary_prob", "bhattacharyya_heterodyne",
    "bhattacharyya_homodyne", "chi2_cdf", "chi2_sf", "conditional_fisher_lo_noise",
    "conditional_fisher_state_prep", "dump_config", "fisher_combine", "fisher_heterodyne",
    "fisher_homodyne", "fisher_homodyne_lossy", "fisher_homodyne_lossy_max", "fisher_report",
    "golden_section_max", "holevo_variance", "interior_grid", "loglik_heterodyne",
    "loglik_homodyne", "lossy_optimal_phase", "lossy_quadrature_variance", "mean_photon_number",
    "mle_heterodyne_closed_form", "mle_homodyne_closed_form", "mle_homodyne_truncated",
    "mle_numeric", "moment_report", "nonstationary_prob", "optimal_phase", "optimal_squeezing",
    "parse_config", "preset", "qfi_lossy", "qfi_squeezed_vacuum", "quadrature_variance",
    "regularized_gamma", "run_aqse_homodyne", "run_campaign", "run_chh", "run_nonadaptive_homodyne",
    "run_strategy", "run_two_step", "sample_heterodyne", "sample_homodyne", "snl_bound",
    "stationary_point_prob", "wrap_phase", "write_outcome_dump",
]
