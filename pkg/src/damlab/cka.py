"""Linear centered kernel alignment between feature matrices.

CKA(A, B) = ||B~' A~||_F^2 / (||A~' A~||_F * ||B~' B~||_F) on column-centered
features, invariant to orthogonal rotation and isotropic scaling of either
argument.  For single feature columns this reduces to squared correlation,
so the pairwise per-unit matrix is the elementwise square of the correlation
matrix.
"""

from dataclasses import dataclass

import numpy as np

from .engine.layers import Network
from .errors import DimensionError, DomainError, StructuralError
from .gate import DamGate

__all__ = ["cka_similarity", "pairwise_unit_cka", "hidden_features", "cka_report",
           "CkaReport"]


def _center(F):
    return F - F.mean(axis=0, keepdims=True)


def cka_similarity(A: np.ndarray, B: np.ndarray) -> float:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] != B.shape[0] or A.shape[0] < 2:
        raise DimensionError(
            f"cka_similarity: need 2-D inputs with a shared sample axis of >= 2 "
            f"(got {A.shape} and {B.shape})")
    Ac, Bc = _center(A), _center(B)
    denom_a = np.linalg.norm(Ac.T @ Ac)
    denom_b = np.linalg.norm(Bc.T @ Bc)
    if denom_a == 0.0 or denom_b == 0.0:
        raise DomainError("cka_similarity: zero-variance features, similarity undefined")
    return float(np.linalg.norm(Bc.T @ Ac) ** 2 / (denom_a * denom_b))


def pairwise_unit_cka(F: np.ndarray) -> np.ndarray:
    """CKA between every pair of single feature columns of F.

    Equals the squared correlation matrix: symmetric, unit diagonal.
    Columns with zero variance are rejected.
    """
    F = np.asarray(F, dtype=np.float64)
    Fc = _center(F)
    norms = np.linalg.norm(Fc, axis=0)
    if np.any(norms == 0.0):
        raise DomainError("pairwise_unit_cka: zero-variance feature column")
    C = (Fc / norms).T @ (Fc / norms)
    return C * C


def hidden_features(net: Network, X: np.ndarray, block: int) -> np.ndarray:
    """Feature matrix at hidden block ``block`` (0-based).

    Blocks are the masked layers when the network has gates, otherwise the
    activation layers; the returned features are the block outputs.
    """
    from .engine.layers import ActivationLayer
    has_gates = any(isinstance(l, DamGate) for l in net.layers)
    marker = DamGate if has_gates else ActivationLayer
    seen = -1
    h = np.asarray(X, dtype=np.float64)
    for layer in net.layers:
        h = layer.forward(h)
        if isinstance(layer, marker):
            seen += 1
            if seen == block:
                return h
    raise StructuralError(f"hidden_features: no block {block} in this network")


@dataclass
class CkaReport:
    matrix: np.ndarray
    unit_indices: np.ndarray      # columns the matrix refers to
    mean_offdiag: float
    std_offdiag: float
    max_offdiag: float


def cka_report(net: Network, X: np.ndarray, block: int = 0) -> CkaReport:
    """Pairwise CKA over the surviving units of one hidden block.

    Surviving means nonzero gate value (all units for gate-free networks);
    constant-activation columns are dropped since their similarity is
    undefined.  Requires at least 2 usable units.
    """
    feats = hidden_features(net, X, block)
    keep = np.arange(feats.shape[1])
    gates = net.gates()
    if gates and block < len(gates):
        keep = np.flatnonzero(gates[block].gate_values() > 0.0)
    feats = feats[:, keep]
    variances = feats.var(axis=0)
    usable = variances > 0.0
    feats, keep = feats[:, usable], keep[usable]
    if feats.shape[1] < 2:
        raise StructuralError(
            f"cka_report: fewer than 2 surviving units with variance at block {block}")
    matrix = pairwise_unit_cka(feats)
    off = matrix[~np.eye(matrix.shape[0], dtype=bool)]
    return CkaReport(matrix=matrix, unit_indices=keep,
                     mean_offdiag=float(off.mean()), std_offdiag=float(off.std()),
                     max_offdiag=float(off.max()))
