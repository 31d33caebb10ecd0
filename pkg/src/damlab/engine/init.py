"""Parameter initialization schemes.

The default scheme draws i.i.d. from U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
where fan_in is the trailing dimension of the shape.
"""

import numpy as np

from ..errors import ConfigError

__all__ = ["init_params"]


def init_params(rng: np.random.Generator, shape, scheme: str = "scaled_uniform") -> np.ndarray:
    """Draw a float64 parameter tensor of ``shape`` from ``rng``.

    Schemes: ``scaled_uniform`` (bound 1/sqrt(fan_in)), ``normal`` (standard
    normal, used for raw generator matrices), ``zeros``.
    """
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if any(s <= 0 for s in shape):
        raise ConfigError(f"init_params: shape must be positive, got {shape}")
    if scheme == "scaled_uniform":
        bound = 1.0 / np.sqrt(shape[-1])
        return rng.uniform(-bound, bound, size=shape)
    if scheme == "normal":
        return rng.standard_normal(size=shape)
    if scheme == "zeros":
        return np.zeros(shape)
    raise ConfigError(f"init_params: unknown scheme '{scheme}'")
