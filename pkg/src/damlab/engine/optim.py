"""SGD (with momentum) and Adam, both with coupled L2 weight decay.

Weight decay is added to the raw gradient (p <- p - lr * (g + wd * p)) and is
never applied to parameters flagged ``decay=False`` (gate offsets carry their
own explicit penalty).  Frozen parameters are skipped entirely: no value
update, no state update.
"""

import numpy as np

from ..errors import StateError

__all__ = ["SGD", "Adam", "step_decay_lr"]


class _OptimizerBase:
    def __init__(self, params, lr: float, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)

    def _effective_grad(self, p):
        if self.weight_decay != 0.0 and p.decay:
            return p.grad + self.weight_decay * p.value
        return p.grad

    def _check_ready(self):
        if not any(p.grad_ready for p in self.params):
            raise StateError("optimizer step before any gradient accumulation")


class SGD(_OptimizerBase):
    def __init__(self, params, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
        super().__init__(params, lr, weight_decay)
        self.momentum = float(momentum)
        self._buf = [np.zeros_like(p.value) for p in self.params]

    def step(self) -> None:
        self._check_ready()
        for p, buf in zip(self.params, self._buf):
            if p.frozen:
                continue
            g = self._effective_grad(p)
            if self.momentum != 0.0:
                buf *= self.momentum
                buf += g
                g = buf
            p.value -= self.lr * g


class Adam(_OptimizerBase):
    def __init__(self, params, lr: float, betas=(0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        super().__init__(params, lr, weight_decay)
        self.beta1, self.beta2 = float(betas[0]), float(betas[1])
        self.eps = float(eps)
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]
        self._t = [0] * len(self.params)

    def step(self) -> None:
        self._check_ready()
        for i, p in enumerate(self.params):
            if p.frozen:
                continue
            g = self._effective_grad(p)
            self._t[i] += 1
            t = self._t[i]
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self._m[i] / (1.0 - self.beta1 ** t)
            v_hat = self._v[i] / (1.0 - self.beta2 ** t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def step_decay_lr(base_lr: float, epoch: int, total_epochs: int) -> float:
    """Step schedule: x0.1 after 50% of the epochs, x0.01 after 75%."""
    lr = base_lr
    if epoch >= int(0.5 * total_epochs):
        lr *= 0.1
    if epoch >= int(0.75 * total_epochs):
        lr *= 0.1
    return lr
