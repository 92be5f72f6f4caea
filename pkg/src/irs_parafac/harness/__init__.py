"""Seeded, parallel Monte Carlo experiments and their reports."""

from .repro import BUILTIN, builtin_spec
from .report import (CSV_COLUMNS, CellResult, MonteCarloReport, emit_report,
                     load_report, parse_csv, write_csv)
from .runner import THREADS_ENV, checksum, default_threads, plan, run_experiment
from .spec import (ESTIMATORS, ExperimentSpec, load_spec, parse_grid, run_seed,
                   spec_from_ini, spec_to_ini)

__all__ = [
    "BUILTIN", "CSV_COLUMNS", "CellResult", "ESTIMATORS", "ExperimentSpec",
    "MonteCarloReport", "THREADS_ENV", "builtin_spec", "checksum", "default_threads",
    "emit_report", "load_report", "load_spec", "parse_csv", "parse_grid", "plan", "run_experiment", "run_seed",
    "spec_from_ini", "spec_to_ini", "write_csv",
]
