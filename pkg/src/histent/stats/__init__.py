"""Self-contained statistics: special functions and significance tests."""
from .significance import (
    ContingencyTable,
    SummarySample,
    TestResult,
    chi_square_yates,
    fisher_exact,
    fisher_tables,
    pearson,
    select_2x2_test,
    welch_t_test,
)
from .special import (
    chisq_cdf,
    chisq_sf,
    log_gamma,
    normal_cdf,
    regularized_incomplete_beta,
    regularized_incomplete_gamma,
    regularized_upper_incomplete_gamma,
    t_cdf,
    t_two_sided_p,
)

__all__ = [
    "ContingencyTable", "SummarySample", "TestResult", "chi_square_yates", "fisher_exact",
    "fisher_tables", "pearson", "select_2x2_test", "welch_t_test",
    "chisq_cdf", "chisq_sf", "log_gamma", "normal_cdf", "regularized_incomplete_beta",
    "regularized_incomplete_gamma", "regularized_upper_incomplete_gamma", "t_cdf", "t_two_sided_p",
]
