"""
Single-stage classifier pruning
===============================

A dense classifier with a gate after each hidden layer trains and prunes in
one stage: offsets stay frozen for a cold-start stretch, then the penalty
pulls them down and entire units switch off.  Afterwards the masked network
collapses into an equivalent compact network with the gates folded away.

Runs a reduced desk-scale setting (~1 minute); the acceptance suite and the
train-classifier CLI command run the full one.
"""

import numpy as np

from damlab.cka import cka_report
from damlab.config import TrainConfig
from damlab.datasets import synthetic_mnist
from damlab.pruning import ClassifierSpec, evaluate_accuracy, extract_pruned, train_classifier

data = (*synthetic_mnist(2000, seed=0), *synthetic_mnist(500, seed=10_000))
spec = ClassifierSpec(widths=(784, 64, 32, 10))
config = TrainConfig(optimizer="sgd", lr=0.05, momentum=0.9, weight_decay=1e-3,
                     lam=0.5, epochs=20, cold_start=5, batch_size=128,
                     lr_decay=True, seed=0)

net, trace, report = train_classifier(spec, data, config)

print("epoch   loss    offsets              active")
for t in (0, 4, 8, 12, 16, 19):
    betas = ", ".join(f"{b:+.2f}" for b in trace.mask_param[t])
    print(f"{t:5d}  {trace.task_loss[t]:6.3f}  [{betas}]   {trace.l0_exact[t]}")

print(f"\ntest accuracy      : {report.test_accuracy:.4f}")
print(f"channels pruned    : {report.channels_pruned:.1%}")
print(f"parameters pruned  : {report.parameters_pruned:.1%}")
print(f"surviving widths   : {report.surviving_widths}")

# The compact network is the same function without any gate layers.
compact = extract_pruned(net)
x = np.random.default_rng(0).uniform(0, 1, size=(100, 784))
gap = np.max(np.abs(net.forward(x) - compact.forward(x)))
print(f"\ncompact network: {compact.num_params()} parameters "
      f"(vs {net.num_params() - len(net.gates())} dense + gates)")
print(f"max |masked - compact| over 100 random inputs: {gap:.2e}")

# Surviving units should be less redundant than an unpruned layer's.
rep = cka_report(net, data[2], block=0)
print(f"\npairwise CKA over surviving block-0 units: mean {rep.mean_offdiag:.3f}, "
      f"max {rep.max_offdiag:.3f}")
