from .checks import CheckResult, evaluate
from .fit import InsufficientDataError, fit_constants
from .plan import PRESETS, ExperimentPlan, RegimeError, check_regime, plan_from_config, preset
from .report import report
from .run import ExperimentRecord, read_records, run, trial_seed, write_records

__all__ = [
    "CheckResult",
    "evaluate",
    "InsufficientDataError",
    "fit_constants",
    "PRESETS",
    "ExperimentPlan",
    "RegimeError",
    "check_regime",
    "plan_from_config",
    "preset",
    "report",
    "ExperimentRecord",
    "read_records",
    "run",
    "trial_seed",
    "write_records",
]
