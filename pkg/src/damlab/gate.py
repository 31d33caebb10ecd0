"""Discriminative-masking gate layer and its analytic machinery.

A gate masks the n units of a layer through a monotone gate function
evaluated at fixed per-unit order values mu_j, shifted by a single learnable
offset beta:

    g_j = max(tanh(alpha * (mu_j + beta)), 0),    mu_j = k * j / n  (j = 1..n)

Units with mu_j + beta <= 0 are switched off *exactly* (gate value 0.0, not
merely small), so for beta in [-k, 0] the number of active units obeys the
closed form ceil(n * (1 + beta / k)).  Training drives beta down through a
linear penalty, shifting the gate to the right and pruning units in order;
only units in the transitioning zone (0 < g_j < 1) push back, through

    q_j = (dL/do_j) * h_j * (1 - g_j^2),    dL/dbeta = alpha * sum_j q_j,

where h is the unmasked feature vector and o = g * h the masked output.  At a
stationary point with penalty weight lam spread over m gates,
sum_j q_j = -lam / (alpha * m); ``equilibrium_residual`` measures the gap.
"""

from dataclasses import dataclass

import numpy as np

from .engine.layers import Parameter
from .errors import ConfigError, DimensionError, DomainError, StateError

__all__ = [
    "ReluTanhGate", "HardSigmoidGate", "RELU_TANH", "HARD_SIGMOID", "GATE_FUNCTIONS",
    "validate_gate_function", "make_ordering", "DamGate", "L1Mask",
    "beta_penalty", "equilibrium_residual", "GateDiagnostics",
    "DEACTIVATED", "SUPPORT", "PRIVILEGED",
]

DEACTIVATED = "deactivated"
SUPPORT = "support"
PRIVILEGED = "privileged"


# ---------------------------------------------------------------------------
# Gate functions
# ---------------------------------------------------------------------------

class ReluTanhGate:
    """Default gate: max(tanh(alpha * z), 0) with z = mu + beta."""

    name = "relu_tanh"

    @staticmethod
    def value(alpha: float, z: np.ndarray) -> np.ndarray:
        return np.where(z > 0, np.tanh(alpha * z), 0.0)

    @staticmethod
    def deriv(alpha: float, z: np.ndarray) -> np.ndarray:
        # d/dbeta = alpha * (1 - g^2) on the active side, 0 at and below the kink
        g = np.tanh(alpha * z)
        return np.where(z > 0, alpha * (1.0 - g * g), 0.0)


class HardSigmoidGate:
    """Piecewise-linear alternative: clamp(alpha * z, 0, 1)."""

    name = "hard_sigmoid"

    @staticmethod
    def value(alpha: float, z: np.ndarray) -> np.ndarray:
        return np.clip(alpha * z, 0.0, 1.0)

    @staticmethod
    def deriv(alpha: float, z: np.ndarray) -> np.ndarray:
        az = alpha * z
        return np.where((az > 0) & (az < 1), alpha, 0.0)


RELU_TANH = ReluTanhGate()
HARD_SIGMOID = HardSigmoidGate()
GATE_FUNCTIONS = {g.name: g for g in (RELU_TANH, HARD_SIGMOID)}


def validate_gate_function(fn, z_lo: float = -10.0, z_hi: float = 10.0,
                           n_probe: int = 2001) -> None:
    """Check the three properties a usable gate function must have.

    (a) an exact-zero region: value is exactly 0.0 on some left tail,
    (b) monotone nondecreasing in z,
    (c) steepness actually parameterized: larger alpha gives a pointwise
        steeper rise on the active side.

    Raises ConfigError on the first violated property.
    """
    z = np.linspace(z_lo, z_hi, n_probe)
    v1 = fn.value(1.0, z)
    if not np.any(v1 == 0.0):
        raise ConfigError(f"gate '{fn.name}': no exact-zero region on [{z_lo}, {z_hi}]")
    if np.any(np.diff(v1) < -1e-12):
        raise ConfigError(f"gate '{fn.name}': value is not monotone nondecreasing")
    v4 = fn.value(4.0, z)
    rising = (v1 > 0) & (v1 < 1)
    if not np.any(v4[rising] > v1[rising] + 1e-12):
        raise ConfigError(f"gate '{fn.name}': steepness parameter has no effect")


# ---------------------------------------------------------------------------
# Ordering
# ---------------------------------------------------------------------------

def make_ordering(n: int, k: float, rng=None) -> np.ndarray:
    """Order values mu_j = k * j / n for j = 1..n.

    With ``rng`` the same multiset is returned in uniformly random order
    (used by the permutation-invariance experiments).
    """
    if n < 1:
        raise ConfigError(f"make_ordering: empty layer, n must be >= 1 (got {n})")
    if k <= 0:
        raise ConfigError(f"make_ordering: k must be > 0 (got {k})")
    mu = k * np.arange(1, n + 1, dtype=np.float64) / n
    if rng is not None:
        mu = rng.permutation(mu)
    return mu


# ---------------------------------------------------------------------------
# The gate layer
# ---------------------------------------------------------------------------

class DamGate:
    """Mask layer with one learnable offset; engine-layer protocol.

    Forward computes o = h * g rowwise.  Backward returns the gradient on h,
    accumulates the offset gradient, and stores the per-unit contributions
    ``last_q`` for equilibrium diagnostics.
    """

    def __init__(self, n: int, k: float = 5.0, alpha: float = 1.0, beta0: float = 1.0,
                 mu: np.ndarray | None = None, rng=None, gate_fn=RELU_TANH,
                 position: int = 0, name: str | None = None):
        if n < 1:
            raise ConfigError(f"DamGate: empty layer, n must be >= 1 (got {n})")
        if k <= 0 or alpha <= 0:
            raise ConfigError(f"DamGate: k and alpha must be > 0 (got k={k}, alpha={alpha})")
        self.n = int(n)
        self.k = float(k)
        self.alpha = float(alpha)
        if mu is None:
            mu = make_ordering(self.n, self.k, rng)
        else:
            mu = np.asarray(mu, dtype=np.float64)
            canonical = make_ordering(self.n, self.k)
            if mu.shape != (self.n,) or not np.allclose(np.sort(mu), canonical):
                raise ConfigError("DamGate: mu must be a permutation of k*j/n for j = 1..n")
        self.mu = mu
        self.gate_fn = gate_fn
        self.position = int(position)
        self.beta = Parameter(name or f"gate{position}.beta", np.array([float(beta0)]),
                              decay=False)
        self.last_q = None
        self._cached_input = None
        self._cached_gates = None

    @property
    def frozen(self) -> bool:
        return self.beta.frozen

    @frozen.setter
    def frozen(self, flag: bool) -> None:
        self.beta.frozen = bool(flag)

    # -- gate evaluation ----------------------------------------------------

    def gate_values(self) -> np.ndarray:
        return self.gate_fn.value(self.alpha, self.mu + self.beta.value[0])

    def l0_exact(self) -> int:
        """Number of strictly positive gate values."""
        return int(np.count_nonzero(self.gate_values() > 0.0))

    def l0_continuous(self) -> float:
        """Relaxation n * (1 + beta / k), clamped to [0, n]."""
        return float(np.clip(self.n * (1.0 + self.beta.value[0] / self.k), 0.0, self.n))

    # -- layer protocol -----------------------------------------------------

    def forward(self, h: np.ndarray, cache: bool = False) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.n:
            raise DimensionError(
                f"{self.beta.name}: input shape {h.shape} does not match gate width {self.n}")
        g = self.gate_values()
        if cache:
            self._cached_input = h
            self._cached_gates = g
        return h * g

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._cached_input is None:
            raise StateError(f"{self.beta.name}: backward called before a cached forward pass")
        h, g = self._cached_input, self._cached_gates
        grad_h = upstream * g
        # per-unit contribution, summed over the batch; exactly 0 for dead units
        dg_dbeta = self.gate_fn.deriv(self.alpha, self.mu + self.beta.value[0])
        q = np.sum(upstream * h, axis=0) * (dg_dbeta / self.alpha)
        self.last_q = q
        self.beta.accumulate(np.array([self.alpha * float(q.sum())]))
        return grad_h

    def parameters(self):
        return [self.beta]

    # -- diagnostics ----------------------------------------------------------

    def classify(self, eps_priv: float = 1e-3):
        """Label each unit deactivated (g == 0), privileged (g >= 1 - eps_priv)
        or support (in between)."""
        if not 0.0 < eps_priv < 1.0:
            raise DomainError(f"classify: eps_priv must be in (0, 1), got {eps_priv}")
        g = self.gate_values()
        return [DEACTIVATED if gj == 0.0 else PRIVILEGED if gj >= 1.0 - eps_priv else SUPPORT
                for gj in g]

    def diagnostics(self, lam: float = 0.0, num_gates: int = 1,
                    q: np.ndarray | None = None, eps_priv: float = 1e-3):
        if q is None:
            q = self.last_q if self.last_q is not None else np.zeros(self.n)
        return GateDiagnostics(
            gates=self.gate_values(),
            l0_exact=self.l0_exact(),
            l0_continuous=self.l0_continuous(),
            classes=self.classify(eps_priv),
            q=np.asarray(q, dtype=np.float64),
            residual=equilibrium_residual(float(np.sum(q)), lam, self.alpha, num_gates),
        )


@dataclass
class GateDiagnostics:
    gates: np.ndarray
    l0_exact: int
    l0_continuous: float
    classes: list
    q: np.ndarray
    residual: float


# ---------------------------------------------------------------------------
# Penalty and equilibrium
# ---------------------------------------------------------------------------

def beta_penalty(gates, lam: float):
    """Linear offset penalty (lam / #gates) * sum_i beta_i.

    Returns ``(penalty, coeff)`` where ``coeff`` is the gradient contribution
    each unfrozen offset receives.  With a single gate this is plain
    lam * beta; with m gates each offset gets lam / m.
    """
    if lam < 0:
        raise ConfigError(f"beta_penalty: lam must be >= 0 (got {lam})")
    gates = list(gates)
    if not gates:
        raise ConfigError("beta_penalty: no gates")
    coeff = lam / len(gates)
    penalty = coeff * sum(float(g.beta.value[0]) for g in gates)
    return penalty, coeff


def apply_beta_penalty(gates, lam: float) -> float:
    """Add the penalty gradient to every unfrozen offset; returns the penalty."""
    penalty, coeff = beta_penalty(gates, lam)
    for g in gates:
        if not g.beta.frozen:
            g.beta.accumulate(np.array([coeff]))
    return penalty


def equilibrium_residual(q_sum: float, lam: float, alpha: float, num_gates: int = 1) -> float:
    """Distance from the stationarity condition sum_j q_j = -lam / (alpha * m).

    Near zero once the offset has stopped moving.
    """
    return float(q_sum + lam / (alpha * num_gates))


# ---------------------------------------------------------------------------
# L1 masking baseline
# ---------------------------------------------------------------------------

class L1Mask:
    """Per-unit learnable nonnegative scales, the lasso-style ablation.

    o = h * s with s clamped at 0 after every optimizer step; sparsity comes
    from an L1 penalty lam * sum(s) whose (sub)gradient is lam for s > 0 and
    0 at s = 0.  The surviving dimension is counted against a threshold,
    which is exactly the thresholding dependence the exact-zero gate avoids.
    """

    def __init__(self, n: int, init: float = 1.0, name: str = "l1mask"):
        if n < 1:
            raise ConfigError(f"L1Mask: empty layer, n must be >= 1 (got {n})")
        self.n = int(n)
        self.scale = Parameter(f"{name}.scale", np.full(self.n, float(init)), decay=False)
        self._cached_input = None

    def forward(self, h: np.ndarray, cache: bool = False) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.n:
            raise DimensionError(
                f"{self.scale.name}: input shape {h.shape} does not match mask width {self.n}")
        if cache:
            self._cached_input = h
        return h * self.scale.value

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._cached_input is None:
            raise StateError(f"{self.scale.name}: backward called before a cached forward pass")
        self.scale.accumulate(np.sum(upstream * self._cached_input, axis=0))
        return upstream * self.scale.value

    def parameters(self):
        return [self.scale]

    def add_l1_gradient(self, lam: float) -> float:
        """Accumulate the L1 subgradient; returns the penalty value."""
        if lam < 0:
            raise ConfigError(f"L1Mask: lam must be >= 0 (got {lam})")
        self.scale.accumulate(lam * (self.scale.value > 0.0).astype(np.float64))
        return float(lam * np.sum(np.abs(self.scale.value)))

    def clamp_nonnegative(self) -> None:
        np.maximum(self.scale.value, 0.0, out=self.scale.value)

    def dimension(self, eps_thr: float = 1e-3) -> int:
        """Units counted as alive: scale above the reporting threshold."""
        return int(np.count_nonzero(self.scale.value > eps_thr))
