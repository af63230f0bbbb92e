"""Dense-tensor reverse-mode autodiff on numpy arrays.

The surface is deliberately small: just enough ops for attention blocks,
feed-forward stacks, and mixture/categorical likelihoods. Forward values
are float64 numpy arrays; each op records a closure that adds its adjoint
contribution to the parents. backward() visits the recorded graph once in
reverse topological order, accumulating additively across fan-out.

No in-place mutation of parameter data during forward; the optimizer is
the single writer.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from .errors import GradientError, ShapeError

LAYER_NORM_EPS = 1e-5

_grad_enabled = True


class no_grad:
    """Context manager that skips graph recording (inference speed)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # Sum the adjoint back down to the operand's original shape.
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad.reshape(shape)


def _asarray(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Tensor:
    __slots__ = ("data", "grad", "_backward", "_parents")

    def __init__(self, data, parents=(), backward=None):
        self.data = _asarray(data)
        self.grad = None
        self._parents = parents if _grad_enabled else ()
        self._backward = backward if _grad_enabled else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    # -- graph -----------------------------------------------------------

    def backward(self):
        if self.data.shape != ():
            raise GradientError(
                f"backward() needs a scalar loss, got shape {self.data.shape}"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accum(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data + other.data

        def bwd(g, a=self, b=other):
            a._accum(_unbroadcast(g, a.data.shape))
            b._accum(_unbroadcast(g, b.data.shape))

        return Tensor(out_data, (self, other), bwd)

    __radd__ = __add__

    def __neg__(self):
        def bwd(g, a=self):
            a._accum(-g)

        return Tensor(-self.data, (self,), bwd)

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __rsub__(self, other):
        return Tensor(other) + (-self)

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data * other.data

        def bwd(g, a=self, b=other):
            a._accum(_unbroadcast(g * b.data, a.data.shape))
            b._accum(_unbroadcast(g * a.data, b.data.shape))

        return Tensor(out_data, (self, other), bwd)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data / other.data

        def bwd(g, a=self, b=other):
            a._accum(_unbroadcast(g / b.data, a.data.shape))
            b._accum(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

        return Tensor(out_data, (self, other), bwd)

    def __rtruediv__(self, other):
        return Tensor(other) / self

    def __pow__(self, p: float):
        out_data = self.data**p

        def bwd(g, a=self):
            a._accum(g * p * a.data ** (p - 1))

        return Tensor(out_data, (self,), bwd)

    def __matmul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a, b = self.data, other.data
        if a.ndim < 1 or b.ndim < 1 or a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
            raise ShapeError(f"matmul shapes do not conform: {a.shape} @ {b.shape}")
        out_data = a @ b
        a_vec, b_vec = a.ndim == 1, b.ndim == 1

        def bwd(g, A=self, B=other):
            # promote 1-D operands so the transpose rules apply uniformly
            g2 = np.asarray(g)
            if a_vec and b_vec:
                g2 = g2.reshape(1, 1)
            elif a_vec:
                g2 = g2[..., None, :]
            elif b_vec:
                g2 = g2[..., :, None]
            A2 = A.data[None, :] if a_vec else A.data
            B2 = B.data[:, None] if b_vec else B.data
            ga = g2 @ np.swapaxes(B2, -1, -2)
            gb = np.swapaxes(A2, -1, -2) @ g2
            A._accum(_unbroadcast(ga, A2.shape).reshape(A.data.shape))
            B._accum(_unbroadcast(gb, B2.shape).reshape(B.data.shape))

        return Tensor(out_data, (self, other), bwd)

    # -- structure -------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out_data = self.data.reshape(shape)

        def bwd(g, a=self):
            a._accum(g.reshape(a.data.shape))

        return Tensor(out_data, (self,), bwd)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        inv = np.argsort(axes)

        def bwd(g, a=self):
            a._accum(g.transpose(inv))

        return Tensor(self.data.transpose(axes), (self,), bwd)

    def __getitem__(self, idx):
        out_data = self.data[idx]

        def bwd(g, a=self):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._accum(full)

        return Tensor(out_data, (self,), bwd)

    def gather_rows(self, indices) -> "Tensor":
        """Rows of a 2-d tensor by integer index (embedding lookup)."""
        idx = np.asarray(indices, dtype=np.intp)
        out_data = self.data[idx]

        def bwd(g, a=self, idx=idx):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._accum(full)

        return Tensor(out_data, (self,), bwd)

    # -- reductions ------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def bwd(g, a=self):
            if axis is not None and not keepdims:
                ax = axis if isinstance(axis, tuple) else (axis,)
                g = np.expand_dims(g, ax)
            a._accum(np.broadcast_to(g, a.data.shape))

        return Tensor(out_data, (self,), bwd)

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else np.prod(
            [self.data.shape[i] for i in (axis if isinstance(axis, tuple) else (axis,))]
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- elementwise nonlinearities -------------------------------------

    def exp(self):
        out_data = np.exp(self.data)

        def bwd(g, a=self, y=out_data):
            a._accum(g * y)

        return Tensor(out_data, (self,), bwd)

    def log(self):
        out_data = np.log(self.data)

        def bwd(g, a=self):
            a._accum(g / a.data)

        return Tensor(out_data, (self,), bwd)

    def sqrt(self):
        out_data = np.sqrt(self.data)

        def bwd(g, a=self, y=out_data):
            a._accum(g * 0.5 / y)

        return Tensor(out_data, (self,), bwd)

    def tanh(self):
        out_data = np.tanh(self.data)

        def bwd(g, a=self, y=out_data):
            a._accum(g * (1.0 - y * y))

        return Tensor(out_data, (self,), bwd)

    def sigmoid(self):
        out_data = 1.0 / (1.0 + np.exp(-np.abs(self.data)))
        out_data = np.where(self.data >= 0, out_data, 1.0 - out_data)

        def bwd(g, a=self, y=out_data):
            a._accum(g * y * (1.0 - y))

        return Tensor(out_data, (self,), bwd)

    def softplus(self):
        out_data = np.logaddexp(0.0, self.data)

        def bwd(g, a=self):
            s = 1.0 / (1.0 + np.exp(-np.abs(a.data)))
            s = np.where(a.data >= 0, s, 1.0 - s)
            a._accum(g * s)

        return Tensor(out_data, (self,), bwd)

    def gelu(self):
        # Exact erf form: 0.5 x (1 + erf(x / sqrt(2))).
        x = self.data
        cdf = 0.5 * (1.0 + erf(x / np.sqrt(2.0)))
        out_data = x * cdf

        def bwd(g, a=self, cdf=cdf):
            x = a.data
            pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
            a._accum(g * (cdf + x * pdf))

        return Tensor(out_data, (self,), bwd)

    # -- fused numerics --------------------------------------------------

    def softmax(self, axis=-1):
        if self.data.shape[axis] == 0:
            raise ShapeError(
                f"softmax over empty axis {axis} of shape {self.data.shape}"
            )
        z = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(z)
        out_data = e / e.sum(axis=axis, keepdims=True)

        def bwd(g, a=self, y=out_data):
            # dx = y * (g - sum(g*y, axis))
            a._accum(y * (g - (g * y).sum(axis=axis, keepdims=True)))

        return Tensor(out_data, (self,), bwd)

    def logsumexp(self, axis=-1, keepdims=False):
        m = self.data.max(axis=axis, keepdims=True)
        e = np.exp(self.data - m)
        s = e.sum(axis=axis, keepdims=True)
        out_keep = m + np.log(s)
        out_data = out_keep if keepdims else np.squeeze(out_keep, axis=axis)
        soft = e / s

        def bwd(g, a=self, soft=soft):
            if not keepdims:
                g = np.expand_dims(g, axis)
            a._accum(soft * g)

        return Tensor(out_data, (self,), bwd)

    def layer_norm(self, axis=-1, eps=LAYER_NORM_EPS):
        """Normalize to zero mean / unit variance along axis (no affine)."""
        m = self.data.mean(axis=axis, keepdims=True)
        c = self.data - m
        v = (c * c).mean(axis=axis, keepdims=True)
        s = np.sqrt(v + eps)
        out_data = c / s

        def bwd(g, a=self, y=out_data, s=s):
            # Exact adjoint incl. eps: dx = (g - mean g - y*mean(g*y)) / s
            gm = g.mean(axis=axis, keepdims=True)
            gym = (g * y).mean(axis=axis, keepdims=True)
            a._accum((g - gm - y * gym) / s)

        return Tensor(out_data, (self,), bwd)


def concat(tensors: list, axis: int = 0) -> Tensor:
    tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g, parts=tensors, splits=splits):
        for part, piece in zip(parts, np.split(g, splits, axis=axis)):
            part._accum(piece)

    return Tensor(out_data, tuple(tensors), bwd)


def stack(tensors: list, axis: int = 0) -> Tensor:
    tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in tensors]
    out_data = np.stack([t.data for t in tensors], axis=axis)

    def bwd(g, parts=tensors):
        for i, part in enumerate(parts):
            part._accum(np.take(g, i, axis=axis))

    return Tensor(out_data, tuple(tensors), bwd)


class Parameters:
    """Named trainable tensors; the optimizer's single source of truth."""

    def __init__(self):
        self._store: dict[str, Tensor] = {}

    def add(self, name: str, array) -> Tensor:
        if name in self._store:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(array)
        self._store[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._store[name]

    def __contains__(self, name: str) -> bool:
        return name in self._store

    def __len__(self):
        return len(self._store)

    def names(self) -> list[str]:
        return list(self._store)

    def items(self):
        return self._store.items()

    def zero_grad(self):
        for t in self._store.values():
            t.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._store.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        missing = set(self._store) - set(arrays)
        extra = set(arrays) - set(self._store)
        if missing or extra:
            raise ShapeError(
                f"parameter set mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        for k, t in self._store.items():
            a = np.asarray(arrays[k], dtype=np.float64)
            if a.shape != t.data.shape:
                raise ShapeError(
                    f"parameter {k!r}: stored shape {a.shape} vs model shape {t.data.shape}"
                )
            t.data = a


def grad_dict(loss: Tensor, params: Parameters) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss for every named parameter.

    Parameters unreachable from the loss get explicit zeros.
    """
    params.zero_grad()
    loss.backward()
    out = {}
    for name, t in params.items():
        out[name] = np.zeros_like(t.data) if t.grad is None else t.grad
    return out
