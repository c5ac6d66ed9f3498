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

"""Tensors and the reverse-mode differentiation tape.

Ops record onto the tape that is active in the current context. With no
active tape nothing is recorded, which makes frozen-parameter inference
read-only and safe to call from several threads.
"""

import contextvars
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NonFiniteError, TapeError

_ACTIVE_TAPE: contextvars.ContextVar = contextvars.ContextVar("active_tape", default=None)


class Tensor:
    """A numpy array with an optional gradient slot.

    Leaf tensors with ``requires_grad`` are parameters; their gradients
    accumulate into ``grad``. Tensors produced by ops while a tape is
    active are interior nodes.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_interior")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data)
        if not np.issubdtype(self.data.dtype, np.floating):
            self.data = self.data.astype(np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._interior = False

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    # Operator sugar; the implementations live in ops.py
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops

        return ops.div(self, other)

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeNode:
    """One primitive op: its output, inputs and vector-Jacobian product."""

    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    vjp: VJP


class Tape:
    """Ordered record of primitive ops for one backward pass.

    Use as a context manager; ops executed inside the block are recorded.
    """

    def __init__(self):
        self._nodes: List[TapeNode] = []
        self._spent = False
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def ops(self) -> List[str]:
        return [node.op for node in self._nodes]

    def record(self, op: str, output: Tensor, inputs: Sequence[Tensor], vjp: VJP) -> None:
        if self._spent:
            raise TapeError("cannot record onto a tape that was already differentiated")
        output._interior = True
        self._nodes.append(TapeNode(op=op, output=output, inputs=tuple(inputs), vjp=vjp))

    def reset(self) -> None:
        self._nodes.clear()
        self._spent = False

    def backward(self, loss: Tensor) -> None:
        backward(self, loss)


def current_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def check_finite(data: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"op '{op}' produced non-finite values", name=op)


def make_result(op: str, data: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    """Wrap an op output, recording it when a tape is active and any input needs grad."""
    check_finite(data, op)
    tape = current_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data)
    if needs_grad:
        out.requires_grad = True
        tape.record(op, out, inputs, vjp)
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """
    Reverse-mode sweep from a scalar loss.

    Gradients of leaf parameters accumulate additively into ``Tensor.grad``.
    A tape can be differentiated once; call ``reset`` to reuse it.

    Args:
        tape: Tape that recorded the forward pass
        loss: Scalar tensor produced on that tape
    """
    if tape._spent:
        raise TapeError("backward already ran on this tape; reset it first")
    if loss.data.size != 1:
        raise TapeError(f"loss must be scalar, got shape {loss.shape}")
    tape._spent = True
    if not loss.requires_grad:
        return

    pending = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape._nodes):
        grad = pending.pop(id(node.output), None)
        if grad is None:
            continue
        input_grads = node.vjp(grad)
        for tensor, g in zip(node.inputs, input_grads):
            if g is None or not tensor.requires_grad:
                continue
            if g.shape != tensor.shape:
                g = np.broadcast_to(g, tensor.shape)
            if tensor._interior:
                key = id(tensor)
                pending[key] = pending[key] + g if key in pending else g
            else:
                tensor.grad += g
