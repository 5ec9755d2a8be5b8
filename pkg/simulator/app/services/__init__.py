# Services package for benchmark sweeps
from .bench import measure_comm, measure_modules, run_baseline_compare, run_bench, run_depth

__all__ = ['measure_comm', 'measure_modules', 'run_baseline_compare', 'run_bench', 'run_depth']
