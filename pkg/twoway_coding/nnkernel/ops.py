# Copyright 2025 The Two-Way Coding Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Differentiable primitive ops on Tensors.

Broadcasting follows numpy; gradients are summed back to each input's shape.
"""

import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor, as_tensor, make_result

Axis = Union[int, Tuple[int, ...], None]

_GELU_C = math.sqrt(2.0 / math.pi)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_result("add", a.data + b.data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_result("sub", a.data - b.data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return make_result("mul", a.data * b.data, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    out = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        )

    return make_result("div", out, (a, b), vjp)


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a Python constant."""
    a = as_tensor(a)

    def vjp(g):
        return (g * factor,)

    return make_result("scale", a.data * factor, (a,), vjp)


def square(a: Tensor) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        return (2.0 * g * a.data,)

    return make_result("square", a.data * a.data, (a,), vjp)


def sqrt(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)

    def vjp(g):
        return (g * 0.5 / out,)

    return make_result("sqrt", out, (a,), vjp)


def maximum(a: Tensor, floor: float) -> Tensor:
    """Elementwise max with a constant; gradient passes where a > floor."""
    a = as_tensor(a)
    mask = a.data > floor

    def vjp(g):
        return (g * mask,)

    return make_result("maximum", np.where(mask, a.data, floor), (a,), vjp)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions of {a.shape} and {b.shape} differ")

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return make_result("matmul", np.matmul(a.data, b.data), (a, b), vjp)


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0

    def vjp(g):
        return (g * mask,)

    return make_result("relu", a.data * mask, (a,), vjp)


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return make_result("tanh", out, (a,), vjp)


def gelu(a: Tensor) -> Tensor:
    """tanh approximation of GELU."""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def vjp(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return make_result("gelu", out, (a,), vjp)


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_result("sum", out, (a,), vjp)


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = np.mean(a.data, axis=axis, keepdims=keepdims)
    count = a.data.size // max(out.size, 1)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape) / count,)

    return make_result("mean", out, (a,), vjp)


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        return (g.reshape(a.shape),)

    return make_result("reshape", a.data.reshape(shape), (a,), vjp)


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def vjp(g):
        return (np.transpose(g, inverse),)

    return make_result("transpose", np.transpose(a.data, axes), (a,), vjp)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: {e}")
    return make_result("concat", data, tensors, vjp)


def stack(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def vjp(g):
        return tuple(np.moveaxis(g, axis, 0))

    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"stack: {e}")
    return make_result("stack", data, tensors, vjp)


def take(a: Tensor, index: int, axis: int = -1) -> Tensor:
    """Select one position along an axis (the axis is dropped)."""
    a = as_tensor(a)
    out = np.take(a.data, index, axis=axis)

    def vjp(g):
        full = np.zeros_like(a.data)
        slicer = [slice(None)] * a.ndim
        slicer[axis] = index
        full[tuple(slicer)] = g
        return (full,)

    return make_result("take", out, (a,), vjp)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=axis, keepdims=True)

    def vjp(g):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return make_result("softmax", out, (a,), vjp)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    out = shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    probs = np.exp(out)

    def vjp(g):
        return (g - probs * np.sum(g, axis=axis, keepdims=True),)

    return make_result("log_softmax", out, (a,), vjp)


def softmax_cross_entropy(logits: Tensor, targets, reduction: str = "mean") -> Tensor:
    """
    -log softmax(logits)[target] with max-subtraction for stability.

    Args:
        logits: (..., C) scores
        targets: Integer class indices of shape logits.shape[:-1]
        reduction: "mean", "sum" or "none"

    Returns:
        Scalar (mean/sum) or per-row losses
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    classes = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise ShapeError(f"targets {targets.shape} do not match logits {logits.shape}")
    if np.any(targets < 0) or np.any(targets >= classes):
        raise ValueError(f"target index outside [0, {classes})")

    shifted = logits.data - np.max(logits.data, axis=-1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    log_probs = shifted - log_norm
    picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]
    losses = -picked
    rows = max(losses.size, 1)

    if reduction == "mean":
        out = np.asarray(losses.mean())
    elif reduction == "sum":
        out = np.asarray(losses.sum())
    elif reduction == "none":
        out = losses
    else:
        raise ValueError(f"unknown reduction {reduction!r}")

    def vjp(g):
        probs = np.exp(log_probs)
        np.put_along_axis(
            probs, targets[..., None], np.take_along_axis(probs, targets[..., None], -1) - 1.0, -1
        )
        if reduction == "none":
            return (probs * g[..., None],)
        factor = g / rows if reduction == "mean" else g
        return (probs * factor,)

    return make_result("softmax_cross_entropy", out, (logits,), vjp)


def constant(data, dtype: Optional[np.dtype] = None) -> Tensor:
    """A tensor that never requires grad."""
    array = np.asarray(data, dtype=dtype) if dtype is not None else np.asarray(data)
    return Tensor(array, requires_grad=False)
