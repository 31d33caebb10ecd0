"""Command-line entry points.

One experiment per invocation, driven by a JSON config file (see
docs/config_schema.md); results land as CSV files in the output directory
(config ``out_dir``, overridable with DAMLAB_OUT_DIR).  Exit codes: 0 on
success, 1 on configuration/usage errors, 2 on runtime failures.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import ExperimentConfig, TrainConfig, config_to_dict, parse_config, resolve_out_dir
from .datasets import load_train_test
from .dr import (SweepGrid, SyntheticSpec, autoencoder_ablation, build_dr_model,
                 generate_synthetic, hyperparameter_sweep, train_dr)
from .engine.rng import spawn
from .errors import ConfigError, DamLabError
from .gate import DamGate
from .pruning import (ClassifierSpec, PruneReport, permutation_invariance_experiment,
                      train_classifier)
from .trace import emit_csv

__all__ = ["main", "dispatch"]


def _out_path(cfg, name):
    out_dir = resolve_out_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _classifier_data(cfg):
    v = cfg.values
    return load_train_test(v["synthetic_data"], v["subset"], seed=v["seed"],
                           mnist_images=v["mnist_images"], mnist_labels=v["mnist_labels"],
                           mnist_test_images=v["mnist_test_images"],
                           mnist_test_labels=v["mnist_test_labels"])


def _run_gen_data(cfg):
    spec = SyntheticSpec(r=cfg.r, d=cfg.d, N=cfg.n_samples, psi_kind=cfg.psi, seed=cfg.seed)
    data = generate_synthetic(spec)
    stem = f"synthetic_{cfg.psi}_r{cfg.r}_seed{cfg.seed}"
    path = _out_path(cfg, f"{stem}.csv")
    emit_csv(path, [f"x{j}" for j in range(cfg.d)], data.X.tolist())
    with open(_out_path(cfg, f"{stem}.meta.json"), "w", encoding="utf-8") as fh:
        json.dump({"psi": cfg.psi, "r": cfg.r, "d": cfg.d, "N": cfg.n_samples,
                   "seed": cfg.seed}, fh, indent=2, sort_keys=True)
    print(f"wrote {path} ({cfg.n_samples} samples, ambient dim {cfg.d}, latent rank {cfg.r})")
    return 0


def _run_train_dr(cfg):
    spec = SyntheticSpec(r=cfg.r, d=cfg.d, N=cfg.n_samples, psi_kind=cfg.psi, seed=cfg.seed)
    data = generate_synthetic(spec)
    model = build_dr_model(cfg.psi, cfg.d, cfg.n, spawn(cfg.seed, 0), k=cfg.k,
                           alpha=cfg.alpha, beta0=cfg.beta0)
    trace = train_dr(model, data.X, cfg.train_config())
    path = _out_path(cfg, f"train_dr_{cfg.psi}_r{cfg.r}_seed{cfg.seed}.csv")
    trace.write_csv(path)
    print(f"wrote {path}")
    print(f"final: active units {trace.final_l0()[0]} (true rank {cfg.r}), "
          f"offset {trace.final_mask_param()[0]:.6g}, "
          f"relative reconstruction error {trace.final_task_loss():.3e}")
    return 0


def _run_sweep(cfg):
    spec = SyntheticSpec(r=cfg.r, d=cfg.d, N=cfg.n_samples, psi_kind=cfg.psi, seed=cfg.seed)
    grid = SweepGrid(lrs=cfg.lrs, lams=cfg.lams, beta0s=cfg.beta0s)
    base = cfg.train_config()
    cells = hyperparameter_sweep(spec, grid, base, n=cfg.n, k=cfg.k, alpha=cfg.alpha)
    path = _out_path(cfg, f"sweep_{cfg.psi}_r{cfg.r}.csv")
    emit_csv(path, list(cells[0].HEADER), [c.row() for c in cells])
    failed = sum(c.failed for c in cells)
    print(f"wrote {path} ({len(cells)} cells, {failed} failed)")
    return 0


def _run_train_classifier(cfg):
    spec = ClassifierSpec(widths=tuple(cfg.widths), activation=cfg.activation,
                          k=cfg.k, alpha=cfg.alpha, beta0=cfg.beta0)
    net, trace, report = train_classifier(spec, _classifier_data(cfg), cfg.train_config())
    trace_path = _out_path(cfg, f"classifier_trace_seed{cfg.seed}.csv")
    trace.write_csv(trace_path)
    report_path = _out_path(cfg, f"classifier_report_seed{cfg.seed}.csv")
    emit_csv(report_path, list(PruneReport.HEADER), [report.row()])
    print(f"wrote {trace_path}\nwrote {report_path}")
    print(f"test accuracy {report.test_accuracy:.4f}, channels pruned "
          f"{report.channels_pruned:.2%}, parameters pruned {report.parameters_pruned:.2%}")
    return 0


def _run_mnist_ablation(cfg):
    X, _, _, _ = _classifier_data(cfg)
    points = autoencoder_ablation(X, cfg.train_config(lam=0.0), cfg.lambdas_dam,
                                  cfg.lambdas_l1, k=cfg.k, alpha=cfg.alpha,
                                  beta0=cfg.beta0, eps_thr=cfg.eps_thr)
    path = _out_path(cfg, "ablation_curves.csv")
    emit_csv(path, list(points[0].HEADER), [p.row() for p in points])
    print(f"wrote {path}")
    for p in points:
        print(f"  {p.method:>3} lam={p.lam:<8g} dim={p.final_dim:<3d} loss={p.final_loss:.4e}")
    return 0


def _run_analyze(cfg):
    spec = ClassifierSpec(widths=tuple(cfg.widths), activation=cfg.activation,
                          k=cfg.k, alpha=cfg.alpha, beta0=cfg.beta0)
    data = _classifier_data(cfg)
    if cfg.analysis == "permutation":
        result = permutation_invariance_experiment(spec, data, cfg.train_config(),
                                                   runs=cfg.runs)
        path = _out_path(cfg, "permutation_runs.csv")
        emit_csv(path, ("run",) + PruneReport.HEADER,
                 [[i] + r.row() for i, r in enumerate(result.reports)])
        print(f"wrote {path}")
        print(f"RSD: accuracy {result.rsd_accuracy:.4f}, channels {result.rsd_channels:.4f}, "
              f"parameters {result.rsd_parameters:.4f}")
        return 0
    from .cka import cka_report
    net, _, report = train_classifier(spec, data, cfg.train_config())
    rep = cka_report(net, data[2], block=cfg.cka_layer)
    path = _out_path(cfg, f"cka_block{cfg.cka_layer}.csv")
    emit_csv(path, [f"u{j}" for j in rep.unit_indices], rep.matrix.tolist())
    print(f"wrote {path}")
    print(f"off-diagonal CKA: mean {rep.mean_offdiag:.4f}, std {rep.std_offdiag:.4f}, "
          f"max {rep.max_offdiag:.4f} over {len(rep.unit_indices)} surviving units "
          f"(test accuracy {report.test_accuracy:.4f})")
    return 0


def _run_gate_demo(args):
    gate = DamGate(args.n, k=args.k, alpha=args.alpha, beta0=args.beta)
    g = gate.gate_values()
    formula = int(np.ceil(args.n * (1 + args.beta / args.k))) if args.beta >= -args.k \
        else 0
    print(f"n={args.n} k={args.k} alpha={args.alpha} beta={args.beta}")
    print(f"active units (gate > 0): {gate.l0_exact()} of {args.n}")
    print(f"closed-form count ceil(n(1+beta/k)): {min(max(formula, 0), args.n)}")
    print(f"continuous relaxation n(1+beta/k): {gate.l0_continuous():.6g}")
    shown = ", ".join(f"{v:.4f}" for v in (g if args.n <= 16 else g[:8]))
    suffix = "" if args.n <= 16 else f", ..., {g[-1]:.4f}"
    print(f"gate values: [{shown}{suffix}]")
    return 0


_RUNNERS = {
    "gen-data": _run_gen_data,
    "train-dr": _run_train_dr,
    "sweep": _run_sweep,
    "train-classifier": _run_train_classifier,
    "mnist-ablation": _run_mnist_ablation,
    "analyze": _run_analyze,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="damlab",
        description="Deterministic experiments with discriminative masking.")
    sub = parser.add_subparsers(dest="command")
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run a '{name}' experiment from a JSON config")
        p.add_argument("--config", required=True, help="path to the JSON config file")
    demo = sub.add_parser("gate-demo", help="print gate values and active counts")
    demo.add_argument("--n", type=int, required=True)
    demo.add_argument("--k", type=float, default=5.0)
    demo.add_argument("--alpha", type=float, default=1.0)
    demo.add_argument("--beta", type=float, required=True)
    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "gate-demo":
            return _run_gate_demo(args)
        cfg = parse_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(
                f"config.kind: '{cfg.kind}' does not match subcommand '{args.command}'")
        return _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DamLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> int:
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
