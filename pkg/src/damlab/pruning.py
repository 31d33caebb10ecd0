"""Structured pruning of dense classifiers with per-layer gates.

A classifier stack is dense -> activation -> gate, repeated per hidden layer,
with the penalty weight spread across the gates.  Offsets stay frozen for the
cold-start epochs so units refine before pruning starts.  After training the
masked network can be collapsed into a compact gate-free network that agrees
with it to float precision, and the permutation-invariance experiment reruns
training with identical weights but reshuffled gate orderings.
"""

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .engine.layers import ActivationLayer, Dense, Network
from .engine.losses import loss_softmax_ce
from .engine.optim import step_decay_lr
from .engine.rng import spawn
from .errors import ConfigError, DivergenceError, StructuralError
from .gate import DamGate, apply_beta_penalty, equilibrium_residual
from .trace import RunTrace

__all__ = ["ClassifierSpec", "build_classifier", "train_classifier", "evaluate_accuracy",
           "extract_pruned", "PruneReport", "prune_report", "add_gradient_noise",
           "permutation_invariance_experiment", "PermutationResult", "rsd",
           "dense_param_count"]


@dataclass
class ClassifierSpec:
    """Widths [input, hidden..., classes] with a gate after each hidden layer."""

    widths: tuple
    activation: str = "relu"
    k: float = 5.0
    alpha: float = 1.0
    beta0: float = 1.0
    gated: bool = True

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 3:
            raise ConfigError("ClassifierSpec: need at least input, one hidden and output width")

    @property
    def hidden(self):
        return self.widths[1:-1]


def build_classifier(spec: ClassifierSpec, rng, mu_rng=None) -> Network:
    """Build the gated stack; ``mu_rng`` permutes every gate's ordering."""
    layers = []
    widths = spec.widths
    for i, width in enumerate(spec.hidden):
        layers.append(Dense(widths[i], width, rng=rng, name=f"fc{i}"))
        layers.append(ActivationLayer(spec.activation))
        if spec.gated:
            layers.append(DamGate(width, k=spec.k, alpha=spec.alpha, beta0=spec.beta0,
                                  rng=mu_rng, position=i, name=f"gate{i}.beta"))
    layers.append(Dense(widths[-2], widths[-1], rng=rng, name=f"fc{len(spec.hidden)}"))
    return Network(layers)


def evaluate_accuracy(net: Network, X: np.ndarray, y: np.ndarray,
                      batch_size: int = 2048) -> float:
    hits = 0
    for start in range(0, X.shape[0], batch_size):
        logits = net.forward(X[start:start + batch_size])
        hits += int(np.sum(np.argmax(logits, axis=1) == y[start:start + batch_size]))
    return hits / X.shape[0]


def add_gradient_noise(params, rho: float, rng) -> None:
    """Add zero-mean Gaussian noise with per-tensor std rho * RMS(grad).

    Tensors with zero gradient stay exactly zero.  The draw happens for every
    tensor regardless, keeping the stream position independent of values.
    """
    if rho < 0:
        raise ConfigError(f"add_gradient_noise: rho must be >= 0 (got {rho})")
    for p in params:
        draw = rng.standard_normal(p.grad.shape)
        if rho == 0.0:
            continue
        rms = float(np.sqrt(np.mean(p.grad * p.grad)))
        if rms > 0.0:
            p.grad += rho * rms * draw


def train_classifier(spec: ClassifierSpec, data, config: TrainConfig, mu_rng=None):
    """Cross-entropy training with the offset penalty spread over the gates.

    ``data`` is (X_train, y_train, X_test, y_test).  Returns the trained
    network, the per-epoch trace and the terminal prune report.
    """
    config.validate()
    X_train, y_train, X_test, y_test = data
    net = build_classifier(spec, spawn(config.seed, 0), mu_rng=mu_rng)
    gates = net.gates()
    opt = config.make_optimizer(net.parameters())
    shuffle_rng = spawn(config.seed, 2)
    noise_rng = spawn(config.seed, 3)
    trace = RunTrace(num_masks=len(gates), mask_label="beta")
    n = X_train.shape[0]
    batch = config.batch_size or n

    for epoch in range(config.epochs):
        if config.lr_decay:
            opt.lr = step_decay_lr(config.lr, epoch, config.epochs)
        for g in gates:
            g.frozen = epoch < config.cold_start
        order = shuffle_rng.permutation(n) if batch < n else np.arange(n)
        task_sum = obj_sum = 0.0
        q_sums = np.zeros(len(gates))
        steps = 0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            net.zero_grad()
            logits = net.forward(X_train[idx], cache=True)
            task, grad = loss_softmax_ce(logits, y_train[idx])
            if not np.isfinite(task):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", trace=trace)
            net.backward(grad)
            penalty = apply_beta_penalty(gates, config.lam) if gates else 0.0
            if config.noise_rho > 0.0:
                add_gradient_noise(net.parameters(), config.noise_rho, noise_rng)
            opt.step()
            task_sum += task
            obj_sum += task + penalty
            q_sums += [float(g.last_q.sum()) for g in gates]
            steps += 1
        trace.append(
            epoch, task_sum / steps, obj_sum / steps,
            [float(g.beta.value[0]) for g in gates],
            [g.l0_exact() for g in gates],
            [g.l0_continuous() for g in gates],
            [equilibrium_residual(q_sums[i] / steps, config.lam, gates[i].alpha,
                                  max(len(gates), 1)) for i in range(len(gates))],
        )

    report = prune_report(net, evaluate_accuracy(net, X_test, y_test)) if gates else None
    return net, trace, report


# ---------------------------------------------------------------------------
# Reporting and extraction
# ---------------------------------------------------------------------------

@dataclass
class PruneReport:
    test_accuracy: float
    channels_pruned: float        # fraction of gated units switched off
    parameters_pruned: float      # fraction of dense parameters removed
    surviving_widths: tuple       # per gated layer
    final_betas: tuple

    HEADER = ("test_accuracy", "channels_pruned", "parameters_pruned",
              "surviving_widths", "final_betas")

    def row(self):
        return [self.test_accuracy, self.channels_pruned, self.parameters_pruned,
                " ".join(str(w) for w in self.surviving_widths),
                " ".join(f"{b:.9g}" for b in self.final_betas)]


def dense_param_count(widths) -> int:
    """Weights plus biases of a plain dense stack with the given widths."""
    return sum(widths[i + 1] * widths[i] + widths[i + 1] for i in range(len(widths) - 1))


def _gate_after(layers, i):
    """Gate acting on the features produced by the dense layer at index i."""
    for layer in layers[i + 1:]:
        if isinstance(layer, Dense):
            return None
        if isinstance(layer, DamGate):
            return layer
    return None


def prune_report(net: Network, test_accuracy: float) -> PruneReport:
    gates = net.gates()
    denses = [l for l in net.layers if isinstance(l, Dense)]
    total_units = sum(g.n for g in gates)
    surviving = [g.l0_exact() for g in gates]
    widths = [denses[0].in_dim] + [d.out_dim for d in denses]
    compact_widths = list(widths)
    dense_idx = 0
    for i, layer in enumerate(net.layers):
        if isinstance(layer, Dense):
            gate = _gate_after(net.layers, i)
            if gate is not None:
                compact_widths[dense_idx + 1] = gate.l0_exact()
            dense_idx += 1
    original = dense_param_count(widths)
    compact = dense_param_count(compact_widths)
    return PruneReport(
        test_accuracy=float(test_accuracy),
        channels_pruned=1.0 - sum(surviving) / total_units if total_units else 0.0,
        parameters_pruned=1.0 - compact / original,
        surviving_widths=tuple(surviving),
        final_betas=tuple(float(g.beta.value[0]) for g in gates),
    )


def extract_pruned(net: Network) -> Network:
    """Collapse a gated network into an equivalent compact gate-free network.

    Units with zero gates are removed; each surviving unit's gate value is
    folded into the weights of the consuming layer (columns of a dense or
    quadratic layer scale exactly like the masked inputs they consume).
    Raises StructuralError if any gate has switched off a whole layer (the
    network output would be constant).
    """
    from .dr import QuadraticLayer

    layers = net.layers
    compact = []
    in_sel = None          # surviving input indices for the next weight layer
    in_scale = None        # gate values folded into its columns
    for layer in layers:
        if isinstance(layer, DamGate):
            g = layer.gate_values()
            alive = np.flatnonzero(g > 0.0)
            if alive.size == 0:
                raise StructuralError(
                    f"gate at position {layer.position} prunes the whole layer "
                    f"(no surviving units)")
            in_sel, in_scale = alive, g[alive]
            # restrict the producing layer's output rows
            for back in range(len(compact) - 1, -1, -1):
                prev = compact[back]
                if isinstance(prev, Dense):
                    compact[back] = Dense(prev.in_dim, alive.size,
                                          weights=prev.w.value[alive],
                                          bias=prev.b.value[alive],
                                          name=prev.w.name.rsplit(".", 1)[0])
                    break
                if isinstance(prev, QuadraticLayer):
                    compact[back] = QuadraticLayer(prev.in_dim, alive.size,
                                                   wa=prev.wa.value[alive],
                                                   wb=prev.wb.value[alive],
                                                   bias=prev.b.value[alive],
                                                   name=prev.wa.name.rsplit(".", 1)[0])
                    break
        elif isinstance(layer, Dense):
            w, b = layer.w.value.copy(), layer.b.value.copy()
            if in_sel is not None:
                w = w[:, in_sel] * in_scale
                in_sel = in_scale = None
            compact.append(Dense(w.shape[1], w.shape[0], weights=w, bias=b,
                                 name=layer.w.name.rsplit(".", 1)[0]))
        elif isinstance(layer, QuadraticLayer):
            wa, wb = layer.wa.value.copy(), layer.wb.value.copy()
            if in_sel is not None:
                wa = wa[:, in_sel] * in_scale
                wb = wb[:, in_sel] * in_scale
                in_sel = in_scale = None
            compact.append(QuadraticLayer(wa.shape[1], wa.shape[0], wa=wa, wb=wb,
                                          bias=layer.b.value.copy(),
                                          name=layer.wa.name.rsplit(".", 1)[0]))
        elif isinstance(layer, ActivationLayer):
            compact.append(ActivationLayer(layer.kind, slope=layer.slope,
                                           elu_alpha=layer.elu_alpha))
        else:
            raise StructuralError(
                f"extract_pruned: unsupported layer type {type(layer).__name__}")
    return Network(compact)


# ---------------------------------------------------------------------------
# Permutation invariance
# ---------------------------------------------------------------------------

def rsd(values) -> float:
    """Relative standard deviation (sample std over mean) across runs."""
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean()
    if mean == 0.0:
        return 0.0
    return float(values.std(ddof=1) / mean)


@dataclass
class PermutationResult:
    reports: list
    rsd_accuracy: float
    rsd_channels: float
    rsd_parameters: float


def permutation_invariance_experiment(spec: ClassifierSpec, data, config: TrainConfig,
                                      runs: int = 5, permute: bool = True) -> PermutationResult:
    """Retrain with identical weight initialization and data order but an
    independent random permutation of every gate's ordering per run.

    With ``permute=False`` every run is identical and all spreads are 0.
    """
    if runs < 2:
        raise ConfigError(f"permutation_invariance_experiment: need runs >= 2 (got {runs})")
    reports = []
    for run in range(runs):
        mu_rng = spawn(config.seed, 4, run) if permute else None
        _, _, report = train_classifier(spec, data, config, mu_rng=mu_rng)
        reports.append(report)
    return PermutationResult(
        reports=reports,
        rsd_accuracy=rsd([r.test_accuracy for r in reports]),
        rsd_channels=rsd([r.channels_pruned for r in reports]),
        rsd_parameters=rsd([r.parameters_pruned for r in reports]),
    )
