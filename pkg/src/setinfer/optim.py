"""Adaptive-moment optimizer over a Parameters store."""

from __future__ import annotations

import numpy as np

from .errors import GradientError, ShapeError
from .tensor import Parameters


class Adam:
    """Standard Adam with bias correction.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)
    """

    def __init__(self, params: Parameters, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def step(self, grads: dict[str, np.ndarray]):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.step_count
        bc2 = 1.0 - b2**self.step_count
        for name, t in self.params.items():
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(t.data)
            if not np.all(np.isfinite(g)):
                raise GradientError(f"non-finite gradient for parameter {name!r}")
            if g.shape != t.data.shape:
                raise ShapeError(
                    f"gradient for {name!r} has shape {g.shape}, parameter {t.data.shape}"
                )
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * (g * g)
            mhat = self.m[name] / bc1
            vhat = self.v[name] / bc2
            t.data = t.data - self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"adam.step": np.array([float(self.step_count)])}
        for k in self.params.names():
            out[f"adam.m.{k}"] = self.m[k].copy()
            out[f"adam.v.{k}"] = self.v[k].copy()
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        self.step_count = int(np.asarray(arrays["adam.step"]).reshape(-1)[0])
        for k in self.params.names():
            self.m[k] = np.asarray(arrays[f"adam.m.{k}"], dtype=np.float64).reshape(
                self.m[k].shape
            )
            self.v[k] = np.asarray(arrays[f"adam.v.{k}"], dtype=np.float64).reshape(
                self.v[k].shape
            )
