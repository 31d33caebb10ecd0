"""Minimal deterministic dense-network engine.

float64 tensors, explicit reverse-mode gradients, SGD/Adam, and a
finite-difference oracle that every analytic gradient is tested against.
"""

from .activations import ACTIVATION_KINDS, activation_backward, activation_forward
from .gradcheck import (check_network_gradients, finite_diff_grad, min_kink_distance,
                        network_loss_closure, relative_error)
from .init import init_params
from .layers import ActivationLayer, Dense, Network, Parameter
from .losses import loss_bce, loss_frobenius, loss_mse, loss_softmax_ce
from .optim import SGD, Adam, step_decay_lr
from .rng import make_rng, spawn

__all__ = [
    "ACTIVATION_KINDS", "activation_backward", "activation_forward",
    "check_network_gradients", "finite_diff_grad", "min_kink_distance",
    "network_loss_closure", "relative_error", "init_params",
    "ActivationLayer", "Dense", "Network", "Parameter",
    "loss_bce", "loss_frobenius", "loss_mse", "loss_softmax_ce",
    "SGD", "Adam", "step_decay_lr", "make_rng", "spawn",
]
