"""Per-epoch run traces and CSV emission.

A RunTrace holds one row per epoch: the task loss, the total objective, and
per mask layer the scalar mask parameter (offset beta, or the L1 norm of the
scale vector for the lasso baseline), the exact and continuous active counts,
and the equilibrium residual (nan where a residual is undefined).  Column
order is fixed and documented in docs/csv_schemas.md.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RunTrace", "emit_csv", "format_value"]


def format_value(v) -> str:
    """Floats with 9 significant digits; ints and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def emit_csv(path, header, rows) -> None:
    """UTF-8 CSV with a header row and deterministic formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


@dataclass
class RunTrace:
    """Training history of one run with ``num_masks`` mask layers."""

    num_masks: int
    mask_label: str = "beta"
    epochs: list = field(default_factory=list)
    task_loss: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    mask_param: list = field(default_factory=list)      # per epoch: [per-mask scalar]
    l0_exact: list = field(default_factory=list)        # per epoch: [per-mask count]
    l0_continuous: list = field(default_factory=list)
    residual: list = field(default_factory=list)

    def append(self, epoch, task, objective, mask_param, l0_exact, l0_continuous, residual):
        if self.epochs and epoch <= self.epochs[-1]:
            raise ValueError(f"epoch indices must be strictly increasing (got {epoch})")
        self.epochs.append(int(epoch))
        self.task_loss.append(float(task))
        self.objective.append(float(objective))
        self.mask_param.append([float(v) for v in mask_param])
        self.l0_exact.append([int(v) for v in l0_exact])
        self.l0_continuous.append([float(v) for v in l0_continuous])
        self.residual.append([float(v) for v in residual])

    def __len__(self):
        return len(self.epochs)

    # -- terminal values ----------------------------------------------------

    def final_l0(self):
        return list(self.l0_exact[-1])

    def final_mask_param(self):
        return list(self.mask_param[-1])

    def final_task_loss(self) -> float:
        return self.task_loss[-1]

    # -- CSV ------------------------------------------------------------------

    def header(self):
        cols = ["epoch", "task_loss", "objective"]
        for i in range(self.num_masks):
            cols += [f"{self.mask_label}_{i}", f"l0_exact_{i}",
                     f"l0_continuous_{i}", f"residual_{i}"]
        return cols

    def rows(self):
        out = []
        for t in range(len(self.epochs)):
            row = [self.epochs[t], self.task_loss[t], self.objective[t]]
            for i in range(self.num_masks):
                row += [self.mask_param[t][i], self.l0_exact[t][i],
                        self.l0_continuous[t][i], self.residual[t][i]]
            out.append(row)
        return out

    def write_csv(self, path) -> None:
        emit_csv(path, self.header(), self.rows())
