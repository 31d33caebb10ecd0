"""Dense-network building blocks: parameters, layers and the layer stack.

A layer is any object with ``forward(x, cache=False)``, ``backward(upstream)``
and ``parameters()``.  ``forward`` with ``cache=True`` stores what the
backward pass needs; plain evaluation (``cache=False``) leaves any previously
cached state untouched so finite-difference probes can run between a backward
pass and the optimizer step.  Backward accumulates into ``Parameter.grad``
and never touches ``Parameter.value``.
"""

import numpy as np

from ..errors import DimensionError, StateError
from .activations import activation_backward, activation_forward
from .init import init_params

__all__ = ["Parameter", "Dense", "ActivationLayer", "Network"]


class Parameter:
    """A named float64 tensor with a separately accumulated gradient.

    ``decay=False`` exempts the tensor from L2 weight decay (gate offsets).
    ``frozen=True`` makes optimizers skip it entirely.
    """

    def __init__(self, name: str, value: np.ndarray, decay: bool = True):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.decay = decay
        self.frozen = False
        self.grad_ready = False

    def accumulate(self, grad: np.ndarray) -> None:
        self.grad += grad
        self.grad_ready = True

    def zero_grad(self) -> None:
        self.grad[...] = 0.0
        self.grad_ready = False

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Dense:
    """Affine map ``y = x @ W.T + b`` with weights of shape (out, in)."""

    def __init__(self, in_dim: int, out_dim: int, rng=None, weights=None,
                 bias=None, name: str = "dense"):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        if weights is None:
            weights = init_params(rng, (self.out_dim, self.in_dim))
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.out_dim, self.in_dim):
            raise DimensionError(
                f"{name}: weights shape {weights.shape} != ({self.out_dim}, {self.in_dim})")
        if bias is None:
            bias = np.zeros(self.out_dim)
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (self.out_dim,):
            raise DimensionError(f"{name}: bias shape {bias.shape} != ({self.out_dim},)")
        self.w = Parameter(f"{name}.w", weights)
        self.b = Parameter(f"{name}.b", bias)
        self._cached_input = None

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"{self.w.name}: input shape {x.shape} does not match weights "
                f"shape {self.w.value.shape} (expected {x.shape[0] if x.ndim == 2 else '?'} x {self.in_dim})")
        if cache:
            self._cached_input = x
        return x @ self.w.value.T + self.b.value

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._cached_input is None:
            raise StateError(f"{self.w.name}: backward called before a cached forward pass")
        x = self._cached_input
        self.w.accumulate(upstream.T @ x)
        self.b.accumulate(upstream.sum(axis=0))
        return upstream @ self.w.value

    def parameters(self):
        return [self.w, self.b]


class ActivationLayer:
    """Elementwise activation; kind is one of activations.ACTIVATION_KINDS."""

    def __init__(self, kind: str, slope: float = 0.01, elu_alpha: float = 1.0):
        self.kind = kind
        self.slope = slope
        self.elu_alpha = elu_alpha
        self._cached_input = None

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        out = activation_forward(self.kind, x, slope=self.slope, elu_alpha=self.elu_alpha)
        if cache:
            self._cached_input = np.asarray(x, dtype=np.float64)
        return out

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._cached_input is None:
            raise StateError(f"activation '{self.kind}': backward called before a cached forward pass")
        return activation_backward(self.kind, self._cached_input, upstream,
                                   slope=self.slope, elu_alpha=self.elu_alpha)

    def parameters(self):
        return []


class Network:
    """An ordered stack of layers trained as one unit."""

    def __init__(self, layers):
        self.layers = list(layers)
        self._forward_cached = False

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, cache=cache)
        if cache:
            self._forward_cached = True
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        """Propagate the loss gradient; returns the gradient w.r.t. the input."""
        if not self._forward_cached:
            raise StateError("backward called before a cached forward pass")
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def gates(self):
        """All mask layers in stack order (anything exposing ``beta``)."""
        return [layer for layer in self.layers if hasattr(layer, "beta")]

    def num_params(self) -> int:
        return sum(p.value.size for p in self.parameters())
