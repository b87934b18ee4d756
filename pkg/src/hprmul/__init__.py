"""Simulation toolkit for redundancy-based fault-tolerant multipliers."""

from .core import (ConfigError, LowerSum, MulConfig, PartialProducts, SplitOperands, UWord,
                   block_partials, compose_product, exact_mul, lower_sum, split_operand)
from .fault import FaultPlan, FaultPlanError, Mode, SiteId, apply_plan, corrupt, stream_for
from .metrics import ErrorStats, SamplePair, SsimParams, aggregate, ed, mssim, mted, select_k
from .schemes import (CostReport, RprConfig, SchemeOutput, bitwise_majority, cost_report,
                      hpr_mul, rpr_default_threshold, rpr_mul, tmr_mul)

__version__ = "0.1.0"
