"""Nonparametric statistics and the special functions behind their p-values."""

from .nonparametric import (
    EXACT_MAX_N,
    KWResult,
    RankedSample,
    SpearmanResult,
    drop_missing,
    kruskal_wallis,
    midranks,
    significance_stars,
    spearman,
)
from .special import betainc, chi_square_sf, gammainc_upper, student_t_sf

__all__ = [
    "EXACT_MAX_N",
    "KWResult",
    "RankedSample",
    "SpearmanResult",
    "betainc",
    "chi_square_sf",
    "drop_missing",
    "gammainc_upper",
    "kruskal_wallis",
    "midranks",
    "significance_stars",
    "spearman",
    "student_t_sf",
]
