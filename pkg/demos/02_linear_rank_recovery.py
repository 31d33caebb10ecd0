"""
Recovering the rank of a low-rank matrix
========================================

Data with r independent latent factors is embedded linearly in d > r
dimensions.  An autoencoder with a gated bottleneck, trained on relative
reconstruction error plus a small linear penalty on the gate offset, prunes
its bottleneck down to exactly r units, and the converged offset lands in
the half-open interval that corresponds to exactly r active units.
"""

import numpy as np

from damlab.config import TrainConfig
from damlab.dr import (SyntheticSpec, build_dr_model, generate_synthetic,
                       optimal_offset_interval, reconstruction_ratio, train_dr)
from damlab.engine.rng import spawn

spec = SyntheticSpec(r=5, d=10, N=1000, psi_kind="linear", seed=0)
data = generate_synthetic(spec)
print(f"data: {data.X.shape[0]} samples, ambient dim {spec.d}, latent rank {spec.r}")
sv = np.linalg.svd(data.X, compute_uv=False)
print("singular values:", np.round(sv[:8], 2), "... (only", spec.r, "are nonzero)")

model = build_dr_model("linear", spec.d, n=30, rng=spawn(0, 0), beta0=1.0)
config = TrainConfig(optimizer="adam", lr=0.01, weight_decay=1e-6, lam=0.01,
                     epochs=2000, seed=0)
trace = train_dr(model, data.X, config)

print("\nepoch   active  offset    rel. error")
for t in (0, 100, 250, 500, 1000, 1500, 1999):
    print(f"{t:5d}   {trace.l0_exact[t][0]:4d}   {trace.mask_param[t][0]:+7.3f}"
          f"   {trace.task_loss[t]:.3e}")

lo, hi = optimal_offset_interval(30, 5.0, spec.r)
beta = trace.final_mask_param()[0]
print(f"\nfinal active units: {trace.final_l0()[0]}  (true rank {spec.r})")
print(f"offset {beta:.4f} in optimal interval ({lo:.4f}, {hi:.4f}]: {lo < beta <= hi}")
print(f"relative reconstruction error: {reconstruction_ratio(model.network(), data.X):.2e}")
