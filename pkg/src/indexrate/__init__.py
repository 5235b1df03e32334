"""Rates, bounds and optimality certificates for groupcast index coding."""

from .bounds import ChainWitness, GuardError, dsm_plus_dp, dsm_plus_enumerate
from .capm import MessageTable, run_capm, verify_feasible
from .closed_form import dag_analysis, directed_cycle_rate, no_excess_rate, theorem3_rate
from .instance import BitSpec, Instance, ParseError, classify, normalize, parse_instance, render_instance
from .oracle import LinearCode, exact_scalar_linear
from .report import RateReport, build_report
from .scapm import ThetaTable, run_scapm

__version__ = "0.1.0"

__all__ = [
    "BitSpec",
    "ChainWitness",
    "GuardError",
    "Instance",
    "LinearCode",
    "MessageTable",
    "ParseError",
    "RateReport",
    "ThetaTable",
    "build_report",
    "classify",
    "dag_analysis",
    "directed_cycle_rate",
    "dsm_plus_dp",
    "dsm_plus_enumerate",
    "exact_scalar_linear",
    "no_excess_rate",
    "normalize",
    "parse_instance",
    "render_instance",
    "run_capm",
    "run_scapm",
    "theorem3_rate",
    "verify_feasible",
]
