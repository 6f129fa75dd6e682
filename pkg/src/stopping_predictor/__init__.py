"""Next-symbol estimation along data-driven stopping times for stationary
discrete-valued sequences, with simulators, exact oracles and a slow
reference implementation."""

__version__ = "0.1.0"

from .block_index import BlockIndex, PatternTooLongError, TwoHalfIndex
from .core import (EstimatorParams, ParameterError, PendingError, Schedule,
                   ScheduleHorizonError, SymbolCodec, TargetFunction, indicator,
                   schedule_J, validate_params)
from .estimator import StoppingTimePredictor
from .predictor import (Estimate, InvariantError, LambdaCompleted, OnlinePredictor,
                        ZetaCompleted, run_predictor)
from .processes import Oracle, ProcessSpec, SpecError, ZeroProbabilityError, generate

__all__ = [
    "BlockIndex", "Estimate", "EstimatorParams", "InvariantError", "LambdaCompleted",
    "OnlinePredictor", "Oracle", "ParameterError", "PatternTooLongError", "PendingError",
    "ProcessSpec", "Schedule", "ScheduleHorizonError", "SpecError", "StoppingTimePredictor",
    "SymbolCodec", "TargetFunction", "TwoHalfIndex", "ZeroProbabilityError", "ZetaCompleted", "generate",
    "indicator", "run_predictor", "schedule_J", "validate_params",
]
