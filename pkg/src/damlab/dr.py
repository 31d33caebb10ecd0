"""Dimensionality-reduction experiments.

Synthetic data: latent factors drawn i.i.d. standard normal are pushed
through a generator (a random matrix, a degree-2 polynomial layer, or a small
MLP) into a higher-dimensional ambient space.  An autoencoder with a gated
bottleneck is then trained on

    || decode(g * encode(X)) - X ||_F^2  +  lam * beta,

and on convergence the number of active bottleneck units should equal the
number of latent factors, with the offset landing in the half-open interval
(k((m-1)/n - 1), k(m/n - 1)] that corresponds to exactly m active units.
"""

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .engine.init import init_params
from .engine.layers import ActivationLayer, Dense, Network
from .engine.losses import loss_frobenius, loss_mse
from .engine.optim import step_decay_lr
from .engine.rng import spawn
from .errors import ConfigError, DimensionError, DivergenceError, StateError
from .gate import DamGate, L1Mask, apply_beta_penalty, equilibrium_residual
from .trace import RunTrace

__all__ = [
    "PSI_KINDS", "SyntheticSpec", "SyntheticData", "generate_synthetic",
    "QuadraticLayer", "DrModel", "build_dr_model", "train_dr",
    "optimal_offset_interval", "offset_in_optimal_interval",
    "SweepGrid", "SweepCell", "hyperparameter_sweep",
    "build_autoencoder", "l1_baseline_train", "AblationPoint",
    "autoencoder_ablation", "mean_pixel_mse",
]

PSI_KINDS = ("linear", "quadratic", "neuralnet")
_HIDDEN = 64  # MLP width for the nonlinear encoders/decoders

# Pruning pressure per generator kind.  The synthetic runs train the relative
# reconstruction error, and the offset penalty weight is multiplied by this
# gain; under Adam that is exactly equivalent to shrinking the loss scale by
# the same factor.  The nonlinear recovery problems need far more pressure at
# desk size than the linear one because squeezing below the ambient dimension
# requires the encoder to keep re-learning a nonlinear chart, which shows up
# as standing resistance against the offset.
PRESSURE_GAIN = {"linear": 1.0, "quadratic": 60.0, "neuralnet": 5.0}

# Default bottleneck widths per generator kind (must exceed the largest
# latent dimension probed; narrower bottlenecks shorten the transition tail)
DEFAULT_BOTTLENECK = {"linear": 30, "quadratic": 15, "neuralnet": 20}


# ---------------------------------------------------------------------------
# Quadratic (degree-2 polynomial) layer
# ---------------------------------------------------------------------------

class QuadraticLayer:
    """y = (x Wa^T) * (x Wb^T) + x Wa^T + b, a degree-2 map with a linear term."""

    def __init__(self, in_dim: int, out_dim: int, rng=None, wa=None, wb=None,
                 bias=None, name: str = "quad"):
        self.in_dim, self.out_dim = int(in_dim), int(out_dim)
        shape = (self.out_dim, self.in_dim)
        from .engine.layers import Parameter
        self.wa = Parameter(f"{name}.wa", init_params(rng, shape) if wa is None else wa)
        self.wb = Parameter(f"{name}.wb", init_params(rng, shape) if wb is None else wb)
        self.b = Parameter(f"{name}.b", np.zeros(self.out_dim) if bias is None else bias)
        self._cache = None

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"{self.wa.name}: input shape {x.shape} does not match ({self.out_dim}, {self.in_dim})")
        u = x @ self.wa.value.T
        v = x @ self.wb.value.T
        if cache:
            self._cache = (x, u, v)
        return u * v + u + self.b.value

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError(f"{self.wa.name}: backward called before a cached forward pass")
        x, u, v = self._cache
        du = upstream * (v + 1.0)
        dv = upstream * u
        self.wa.accumulate(du.T @ x)
        self.wb.accumulate(dv.T @ x)
        self.b.accumulate(upstream.sum(axis=0))
        return du @ self.wa.value + dv @ self.wb.value

    def parameters(self):
        return [self.wa, self.wb, self.b]


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

@dataclass
class SyntheticSpec:
    r: int
    d: int
    N: int
    psi_kind: str = "linear"
    seed: int = 0

    def __post_init__(self):
        if self.psi_kind not in PSI_KINDS:
            raise ConfigError(f"psi_kind must be one of {PSI_KINDS}, got '{self.psi_kind}'")
        if not (self.d > self.r >= 1):
            raise ConfigError(f"need d > r >= 1 (got d={self.d}, r={self.r})")
        if self.N < self.d:
            raise ConfigError(f"need N >= d (got N={self.N}, d={self.d})")


@dataclass
class SyntheticData:
    X: np.ndarray           # (N, d), rows are samples
    r: int
    generator: Network
    spec: SyntheticSpec


def _build_generator(psi_kind: str, in_dim: int, out_dim: int, rng) -> Network:
    """Generator with the same structure as the matching decoder."""
    if psi_kind == "linear":
        # a single random projection matrix, entries standard normal
        w = init_params(rng, (out_dim, in_dim), scheme="normal")
        return Network([Dense(in_dim, out_dim, weights=w, name="psi")])
    if psi_kind == "quadratic":
        return Network([QuadraticLayer(in_dim, out_dim, rng=rng, name="psi")])
    return Network([Dense(in_dim, _HIDDEN, rng=rng, name="psi0"), ActivationLayer("elu"),
                    Dense(_HIDDEN, out_dim, rng=rng, name="psi1")])


def generate_synthetic(spec: SyntheticSpec, rng=None) -> SyntheticData:
    """Draw latent factors N(0, I_r) and map them into d dimensions."""
    if rng is None:
        rng = spawn(spec.seed, 10)
    omega = rng.standard_normal((spec.N, spec.r))
    generator = _build_generator(spec.psi_kind, spec.r, spec.d, rng)
    X = generator.forward(omega)
    return SyntheticData(X=X, r=spec.r, generator=generator, spec=spec)


# ---------------------------------------------------------------------------
# Autoencoder models with a gated bottleneck
# ---------------------------------------------------------------------------

@dataclass
class DrModel:
    encoder: Network
    gate: DamGate
    decoder: Network
    psi_kind: str = "linear"

    def __post_init__(self):
        if self.encoder.layers and getattr(self.encoder.layers[-1], "out_dim", None) not in (None, self.gate.n):
            raise ConfigError("encoder output width must equal the gate width")

    def network(self) -> Network:
        return Network([*self.encoder.layers, self.gate, *self.decoder.layers])


def build_dr_model(psi_kind: str, d: int, n: int, rng, k: float = 5.0,
                   alpha: float = 1.0, beta0: float = 1.0) -> DrModel:
    """Autoencoder for synthetic recovery runs.

    linear:    one matrix either side of the gate;
    quadratic: 3-layer leaky-relu MLP encoder, degree-2 decoder;
    neuralnet: 3-layer elu MLP encoder, 2-layer elu MLP decoder.
    """
    if psi_kind not in PSI_KINDS:
        raise ConfigError(f"psi_kind must be one of {PSI_KINDS}, got '{psi_kind}'")
    gate = DamGate(n, k=k, alpha=alpha, beta0=beta0)
    if psi_kind == "linear":
        enc = Network([Dense(d, n, rng=rng, name="enc")])
        dec = Network([Dense(n, d, rng=rng, name="dec")])
    elif psi_kind == "quadratic":
        enc = Network([Dense(d, _HIDDEN, rng=rng, name="enc0"), ActivationLayer("leaky_relu"),
                       Dense(_HIDDEN, _HIDDEN, rng=rng, name="enc1"), ActivationLayer("leaky_relu"),
                       Dense(_HIDDEN, n, rng=rng, name="enc2")])
        dec = Network([QuadraticLayer(n, d, rng=rng, name="dec")])
    else:
        enc = Network([Dense(d, _HIDDEN, rng=rng, name="enc0"), ActivationLayer("elu"),
                       Dense(_HIDDEN, _HIDDEN, rng=rng, name="enc1"), ActivationLayer("elu"),
                       Dense(_HIDDEN, n, rng=rng, name="enc2")])
        dec = Network([Dense(n, _HIDDEN, rng=rng, name="dec0"), ActivationLayer("elu"),
                       Dense(_HIDDEN, d, rng=rng, name="dec1")])
    return DrModel(encoder=enc, gate=gate, decoder=dec, psi_kind=psi_kind)


def build_autoencoder(widths, bottleneck: int, rng, mask: str = "dam", k: float = 5.0,
                      alpha: float = 1.0, beta0: float = 1.0,
                      activation: str = "relu") -> Network:
    """Symmetric autoencoder (no activation on the code or the output layer).

    ``widths`` are the encoder hidden widths before the bottleneck, e.g.
    (784, 64, 32) with bottleneck 50 builds 784-64-32-50-[mask]-32-64-784.
    """
    widths = list(widths)
    layers = []
    for i in range(len(widths) - 1):
        layers += [Dense(widths[i], widths[i + 1], rng=rng, name=f"enc{i}"),
                   ActivationLayer(activation)]
    layers.append(Dense(widths[-1], bottleneck, rng=rng, name=f"enc{len(widths) - 1}"))
    if mask == "dam":
        layers.append(DamGate(bottleneck, k=k, alpha=alpha, beta0=beta0))
    elif mask == "l1":
        layers.append(L1Mask(bottleneck))
    elif mask != "none":
        raise ConfigError(f"mask must be 'dam', 'l1' or 'none', got '{mask}'")
    rev = widths[::-1]
    layers.append(Dense(bottleneck, rev[0], rng=rng, name="dec0"))
    for i in range(len(rev) - 1):
        layers += [ActivationLayer(activation),
                   Dense(rev[i], rev[i + 1], rng=rng, name=f"dec{i + 1}")]
    return Network(layers)


# ---------------------------------------------------------------------------
# Training loops
# ---------------------------------------------------------------------------

def mean_pixel_mse(pred, target):
    """MSE averaged over samples and feature columns (image reconstruction)."""
    value, grad = loss_mse(pred, target)
    cols = pred.shape[1]
    return value / cols, grad / cols


def relative_frobenius(X):
    """Loss ||pred - target||_F^2 / ||X||_F^2, scale-free across datasets."""
    xnorm = float(np.sum(np.asarray(X, dtype=np.float64) ** 2))
    if xnorm == 0.0:
        raise ConfigError("relative_frobenius: reference matrix is all zeros")

    def loss(pred, target):
        value, grad = loss_frobenius(pred, target)
        return value / xnorm, grad / xnorm

    return loss


def reconstruction_ratio(net: Network, X: np.ndarray) -> float:
    """||net(X) - X||_F^2 / ||X||_F^2 evaluated after training."""
    value, _ = loss_frobenius(net.forward(X), X)
    return value / float(np.sum(X * X))


def _epoch_batches(n_samples, batch_size, shuffle_rng):
    if batch_size is None or batch_size >= n_samples:
        return [np.arange(n_samples)]
    order = shuffle_rng.permutation(n_samples)
    return [order[i:i + batch_size] for i in range(0, n_samples, batch_size)]


def train_autoencoder(net: Network, X: np.ndarray, config: TrainConfig,
                      loss_fn=loss_frobenius, eps_thr: float = 1e-3,
                      penalty_gain: float = 1.0) -> RunTrace:
    """Shared reconstruction-training loop for gated and L1-masked stacks.

    Per-epoch rows record the mean per-step task loss and objective, and the
    post-step mask state.  A non-finite loss aborts with the trace so far.
    ``penalty_gain`` multiplies the offset penalty weight (see PRESSURE_GAIN).
    """
    config.validate()
    gates = [l for l in net.layers if isinstance(l, DamGate)]
    masks = [l for l in net.layers if isinstance(l, L1Mask)]
    num_masks = len(gates) + len(masks)
    if num_masks == 0:
        raise ConfigError("train_autoencoder: network has no mask layer")
    lam = config.lam * penalty_gain
    trace = RunTrace(num_masks=num_masks, mask_label="beta" if gates else "s_l1")
    opt = config.make_optimizer(net.parameters())
    shuffle_rng = spawn(config.seed, 2)

    for epoch in range(config.epochs):
        for g in gates:
            g.frozen = epoch < config.cold_start
        task_sum = obj_sum = 0.0
        q_sums = np.zeros(len(gates))
        steps = 0
        for idx in _epoch_batches(X.shape[0], config.batch_size, shuffle_rng):
            xb = X[idx]
            net.zero_grad()
            pred = net.forward(xb, cache=True)
            task, grad = loss_fn(pred, xb)
            if not np.isfinite(task):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", trace=trace)
            net.backward(grad)
            penalty = apply_beta_penalty(gates, lam) if gates else 0.0
            for m in masks:
                penalty += m.add_l1_gradient(lam)
            opt.step()
            for m in masks:
                m.clamp_nonnegative()
            task_sum += task
            obj_sum += task + penalty
            q_sums += [float(g.last_q.sum()) for g in gates]
            steps += 1

        if gates:
            params = [float(g.beta.value[0]) for g in gates]
            l0e = [g.l0_exact() for g in gates]
            l0c = [g.l0_continuous() for g in gates]
            res = [equilibrium_residual(q_sums[i] / steps, lam, gates[i].alpha,
                                        len(gates)) for i in range(len(gates))]
        else:
            params = [float(np.sum(np.abs(m.scale.value))) for m in masks]
            l0e = [m.dimension(eps_thr) for m in masks]
            l0c = [float(m.dimension(eps_thr)) for m in masks]
            res = [float("nan")] * len(masks)
        trace.append(epoch, task_sum / steps, obj_sum / steps, params, l0e, l0c, res)
    return trace


def train_dr(model: DrModel, X: np.ndarray, config: TrainConfig,
             loss_fn=None) -> RunTrace:
    """Train a gated autoencoder on reconstruction; full batch by default.

    The default objective is the relative reconstruction error plus the
    penalty scaled by the generator's pressure gain.
    """
    gain = 1.0
    if loss_fn is None:
        loss_fn = relative_frobenius(X)
        gain = PRESSURE_GAIN.get(model.psi_kind, 1.0)
    return train_autoencoder(model.network(), X, config, loss_fn=loss_fn,
                             penalty_gain=gain)


def l1_baseline_train(net: Network, X: np.ndarray, config: TrainConfig,
                      eps_thr: float = 1e-3, loss_fn=loss_frobenius) -> RunTrace:
    """Train an L1-masked autoencoder; dimension counted at ``eps_thr``."""
    if not any(isinstance(l, L1Mask) for l in net.layers):
        raise ConfigError("l1_baseline_train: network has no L1 mask layer")
    return train_autoencoder(net, X, config, loss_fn=loss_fn, eps_thr=eps_thr)


# ---------------------------------------------------------------------------
# Offset interval for exact recovery
# ---------------------------------------------------------------------------

def optimal_offset_interval(n: int, k: float, m: int):
    """Half-open offset interval (lo, hi] on which exactly m units are active."""
    if not 1 <= m <= n:
        raise ConfigError(f"need 1 <= m <= n (got m={m}, n={n})")
    return k * ((m - 1) / n - 1.0), k * (m / n - 1.0)


def offset_in_optimal_interval(n: int, k: float, m: int, beta: float) -> bool:
    lo, hi = optimal_offset_interval(n, k, m)
    return lo < beta <= hi


# ---------------------------------------------------------------------------
# Hyperparameter sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepGrid:
    lrs: list
    lams: list
    beta0s: list

    def __post_init__(self):
        if not (self.lrs and self.lams and self.beta0s):
            raise ConfigError("SweepGrid: all axes must be non-empty lists")

    def cells(self):
        idx = 0
        for lr in self.lrs:
            for lam in self.lams:
                for beta0 in self.beta0s:
                    yield idx, float(lr), float(lam), float(beta0)
                    idx += 1


@dataclass
class SweepCell:
    lr: float
    lam: float
    beta0: float
    seed: int
    final_l0: int
    final_loss: float
    failed: bool

    HEADER = ("lr", "lam", "beta0", "seed", "final_l0", "final_loss", "failed")

    def row(self):
        return [self.lr, self.lam, self.beta0, self.seed, self.final_l0,
                self.final_loss, int(self.failed)]


def _cell_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def hyperparameter_sweep(spec: SyntheticSpec, grid: SweepGrid, base_config: TrainConfig,
                         n: int = 50, k: float = 5.0, alpha: float = 1.0):
    """One independent run per grid cell on a fixed synthetic dataset.

    Each cell derives its own seed, so cells can run in any order (or in
    parallel) with identical results.  Divergent cells are recorded as failed
    and the sweep continues.
    """
    data = generate_synthetic(spec)
    results = []
    for idx, lr, lam, beta0 in grid.cells():
        seed = _cell_seed(base_config.seed, idx)
        model = build_dr_model(spec.psi_kind, spec.d, n, spawn(seed, 0),
                               k=k, alpha=alpha, beta0=beta0)
        cfg = TrainConfig(optimizer=base_config.optimizer, lr=lr,
                          weight_decay=base_config.weight_decay, lam=lam,
                          epochs=base_config.epochs, cold_start=base_config.cold_start,
                          seed=seed, batch_size=base_config.batch_size)
        try:
            trace = train_dr(model, data.X, cfg)
            results.append(SweepCell(lr, lam, beta0, seed, trace.final_l0()[0],
                                     trace.final_task_loss(), False))
        except DivergenceError:
            results.append(SweepCell(lr, lam, beta0, seed, -1, float("nan"), True))
    return results


# ---------------------------------------------------------------------------
# Gated-vs-L1 autoencoder ablation
# ---------------------------------------------------------------------------

@dataclass
class AblationPoint:
    method: str
    lam: float
    final_dim: int
    final_loss: float

    HEADER = ("method", "lam", "final_dim", "final_loss")

    def row(self):
        return [self.method, self.lam, self.final_dim, self.final_loss]


def autoencoder_ablation(X: np.ndarray, config: TrainConfig, lambdas_dam,
                         lambdas_l1, widths=(784, 64, 32), bottleneck: int = 50,
                         k: float = 5.0, alpha: float = 1.0, beta0: float = 1.0,
                         eps_thr: float = 1e-3):
    """Bottleneck dimension and reconstruction loss versus penalty weight for
    the gated bottleneck and the L1-scale baseline on the same data.

    The reconstruction loss is the per-pixel mean square error over the full
    training matrix after training.
    """
    if X.shape[1] != widths[0]:
        raise DimensionError(f"data has {X.shape[1]} columns, expected {widths[0]}")
    points = []
    for j, (method, lams) in enumerate((("dam", lambdas_dam), ("l1", lambdas_l1))):
        for i, lam in enumerate(lams):
            seed = _cell_seed(config.seed, 1000 * j + i)
            net = build_autoencoder(widths, bottleneck, spawn(seed, 0), mask=method,
                                    k=k, alpha=alpha, beta0=beta0)
            cfg = TrainConfig(optimizer=config.optimizer, lr=config.lr,
                              weight_decay=config.weight_decay, lam=float(lam),
                              epochs=config.epochs, cold_start=config.cold_start,
                              seed=seed, batch_size=config.batch_size)
            train_autoencoder(net, X, cfg, loss_fn=mean_pixel_mse, eps_thr=eps_thr)
            final_loss, _ = mean_pixel_mse(net.forward(X), X)
            mask = net.gates()[0] if method == "dam" else \
                next(l for l in net.layers if isinstance(l, L1Mask))
            dim = mask.l0_exact() if method == "dam" else mask.dimension(eps_thr)
            points.append(AblationPoint(method, float(lam), dim, final_loss))
    return points
