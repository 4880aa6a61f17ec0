"""Adam with optional global gradient-norm clipping."""

from __future__ import annotations

import numpy as np

from .network import PolicyParams


class Adam:
    def __init__(self, params: PolicyParams, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def grad_norm(self) -> float:
        total = 0.0
        for _, t in self.params.items():
            if t.grad is not None:
                total += float(np.sum(np.square(t.grad, dtype=np.float64)))
        return float(np.sqrt(total))

    def step(self, max_grad_norm: float = None):
        scale = 1.0
        if max_grad_norm is not None:
            norm = self.grad_norm()
            if norm > max_grad_norm and norm > 0:
                scale = max_grad_norm / norm
        self.step_count += 1
        b1c = 1.0 - self.beta1 ** self.step_count
        b2c = 1.0 - self.beta2 ** self.step_count
        for name, t in self.params.items():
            if t.grad is None:
                continue
            g = t.grad if scale == 1.0 else t.grad * scale
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            update = (m / b1c) / (np.sqrt(v / b2c) + self.eps)
            t.data -= (self.lr * update).astype(t.data.dtype, copy=False)

    def state_arrays(self) -> dict:
        """Moment estimates and step counter, for checkpoint resume."""
        out = {"step_count": np.array([self.step_count], dtype=np.float64)}
        for name in self.m:
            out[f"m.{name}"] = self.m[name]
            out[f"v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict):
        self.step_count = int(arrays["step_count"][0])
        for name in self.m:
            self.m[name] = arrays[f"m.{name}"].astype(self.m[name].dtype, copy=True)
            self.v[name] = arrays[f"v.{name}"].astype(self.v[name].dtype, copy=True)
