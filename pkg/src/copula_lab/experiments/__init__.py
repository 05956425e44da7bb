"""Seeded simulation studies and their tabular outputs."""
from .config import STUDIES, StudyConfig, default_config
from .io import summary_records, write_result
from .studies import (
    CellRecord,
    StudyResult,
    run_coverage,
    run_mode_convergence,
    run_regression_coverage,
    run_study,
    run_tau_retention,
)

__all__ = [
    "STUDIES",
    "StudyConfig",
    "default_config",
    "CellRecord",
    "StudyResult",
    "run_tau_retention",
    "run_coverage",
    "run_mode_convergence",
    "run_regression_coverage",
    "run_study",
    "write_result",
    "summary_records",
]
