"""Secrecy and outage analysis for RIS-aided links under Fisher-Snedecor F fading."""
from .channel import AntennaPattern, ScenarioConfig
from .errors import (ConfigError, ContourSeparationError, ConvergenceError, FoldLimitExceeded,
                     GammaPoleError, InsufficientTrials, MethodUnavailable, MomentMatchError,
                     ParameterDomainError, RisPlsError)
from .fading import FisherFParams
from .geometry import AnnulusGeometry, BlockageModel, PathLossParams
from .links import LinkKind

__version__ = "0.1.0"
