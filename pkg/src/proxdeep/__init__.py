"""Deep feed-forward networks trained by ADMM with proximal penalties."""
from .admm import AdmmConfig, FitReport, fit
from .network import Architecture, forward, init_params, predict_proba
from .penalties import PenaltySpec

__all__ = ["AdmmConfig", "Architecture", "FitReport", "PenaltySpec", "fit", "forward",
           "init_params", "predict_proba"]
__version__ = "0.1.0"
