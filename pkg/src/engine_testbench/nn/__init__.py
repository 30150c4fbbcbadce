"""Minimal multilayer perceptron: forward, backprop, optimizers, training."""

from .mlp import (
    MlpParams, Grads, init_mlp, forward, forward_cache, backward, gradient, mse_loss,
    flatten, unflatten, expected_param_count, normalize_outputs, denormalize_outputs,
)
from .optim import sgd_update, adam_init, adam_update, AdamState, clip_grads
from .train import TrainHyper, TrainReport, train_regression, mean_percentage_error
from .io import save_model, load_model, model_to_dict, model_from_dict, write_json_atomic
