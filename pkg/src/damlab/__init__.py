"""damlab: a deterministic laboratory for discriminative masking.

Single-stage structured pruning and compact-representation learning with
position-ordered gates: a minimal float64 dense-network engine, the gate
layer with one learnable offset per masked layer, dimensionality-reduction
and classifier-pruning experiment harnesses, and analysis tooling.
"""

from . import cka, config, datasets, dr, engine, errors, gate, pruning, trace

__version__ = "0.1.0"

__all__ = ["cka", "config", "datasets", "dr", "engine", "errors", "gate",
           "pruning", "trace", "__version__"]
