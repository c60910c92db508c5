"""
Preference inference: the feed-forward regressor and its training loop
"""

from src.inference.mlp import (
    FitConfig,
    GradientCheck,
    Gradients,
    MlpModel,
    backward,
    backward_arrays,
    forward,
    gradient_check,
    init_model,
    loss,
    loss_arrays,
    prediction_loss,
    predict,
    softmax,
)
from src.inference.storage import load_model, save_model
from src.inference.training import FitResult, InferenceResult, fit, infer

__all__ = [
    "FitConfig",
    "FitResult",
    "GradientCheck",
    "Gradients",
    "InferenceResult",
    "MlpModel",
    "backward",
    "backward_arrays",
    "fit",
    "forward",
    "gradient_check",
    "infer",
    "init_model",
    "load_model",
    "loss",
    "loss_arrays",
    "prediction_loss",
    "predict",
    "save_model",
    "softmax",
]
