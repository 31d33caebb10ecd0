"""
Anatomy of a discriminative-masking gate
========================================

A gate assigns every unit j of a layer a fixed order value mu_j = k*j/n and
masks the layer with g_j = max(tanh(alpha*(mu_j + beta)), 0).  One scalar
offset beta decides how many units are exactly off.
"""

import numpy as np

from damlab.gate import DamGate

# Ten units, the standard steepness and domain size
gate = DamGate(n=10, k=5.0, alpha=1.0, beta0=0.0)
print("order values mu:", np.round(gate.mu, 2))
print("gates at beta=0:", np.round(gate.gate_values(), 4))

# Lowering beta shifts the gate to the right and switches units off exactly.
for beta in (0.0, -1.0, -2.0, -3.5, -5.0):
    gate.beta.value[0] = beta
    g = gate.gate_values()
    print(f"beta={beta:+.1f}  active={gate.l0_exact():2d}  "
          f"closed-form={int(np.ceil(max(0, min(10, 10 * (1 + beta / 5)))))}  "
          f"gates={np.round(g, 3)}")

# The closed form holds for every width: count == ceil(n(1 + beta/k)).
big = DamGate(n=100, k=10.0, alpha=1.0, beta0=-2.0)
print("\nn=100, k=10, beta=-2 :", big.l0_exact(), "active (20% pruned)")
big.beta.value[0] = -6.0
print("n=100, k=10, beta=-6 :", big.l0_exact(), "active (60% pruned)")

# Units split into three roles: deactivated (gate exactly 0), support
# (rising part of the gate, the only units that push back on beta), and
# privileged (saturated near 1, contributing nothing to the offset gradient).
steep = DamGate(n=10, k=5.0, alpha=8.0, beta0=-2.0)
print("\nsteep gate classes:", steep.classify(eps_priv=1e-3))

# Only support units influence beta: feed features through and inspect the
# per-unit contributions from the backward pass.
h = np.ones((1, 10))
steep.forward(h, cache=True)
steep.backward(np.ones((1, 10)))
print("per-unit offset contributions q:", np.round(steep.last_q, 4))
