"""Chain-ladder reserving with a continuous-time square-root diffusion.

The package estimates the conditional distribution of the total claims
reserve from a cumulative run-off triangle with four estimators:

* the continuous-time parametric bootstrap (exact compound Poisson-Gamma
  transitions, never negative),
* Mack's residual bootstrap,
* the Gaussian time-series bootstrap,
* a moment-matched Log-normal / Gamma fit to Mack's MSEP.
"""

from ctreserve.triangle import Triangle, TriangleError, builtin_dataset, parse_triangle
from ctreserve.chain_ladder import (
    DevParams,
    MsepResult,
    ReserveSummary,
    dev_factors,
    estimate,
    mack_msep,
    propagate_moments,
    sigma2,
    tail_sigma2,
    ultimates_and_reserve,
)
from ctreserve.ct_model import (
    CtParams,
    TransitionLaw,
    cond_moments,
    from_ct,
    laplace,
    prob_zero,
    sample_transition,
    to_ct,
    transition_law,
)
from ctreserve.bootstrap import (
    BootstrapConfig,
    BootstrapResult,
    ParametricReserve,
    fit_parametric,
    run_bootstrap,
    run_ct_bootstrap,
    run_mack_bootstrap,
    run_ts_bootstrap,
)
from ctreserve.analytics import DistributionSummary, comparison_table, histogram, parametric_quantile, summarize

__version__ = "0.1.0"
