"""Benchmark harness: seeded simulation studies, rate studies, and real-data
holdout evaluation, with deterministic report persistence."""

from .config import SimulationConfig, TuningConfig, config_hash, mix_seed
from .datasets import Dataset, difference_quotient, load_dataset, load_query_curves
from .holdout import holdout_eval
from .rates import (
    RateReport,
    recovery_rate_study,
    regression_rate_study,
    relative_reduction,
)
from .report import EvalReport, MethodResult, report_csv, report_meta, write_report
from .simulate import run_replicate, run_simulation

__all__ = [
    "SimulationConfig",
    "TuningConfig",
    "config_hash",
    "mix_seed",
    "Dataset",
    "difference_quotient",
    "load_dataset",
    "load_query_curves",
    "holdout_eval",
    "RateReport",
    "recovery_rate_study",
    "regression_rate_study",
    "relative_reduction",
    "EvalReport",
    "MethodResult",
    "report_csv",
    "report_meta",
    "write_report",
    "run_replicate",
    "run_simulation",
]
