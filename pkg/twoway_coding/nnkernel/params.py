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

"""Named parameter collections with gradient, moment and buffer slots."""

import math
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor


class ParameterSet:
    """Parameters of one user's encoder/decoder (theta_i, power weights w_i).

    Every parameter owns a gradient of identical shape plus first/second
    optimizer moments. Buffers are non-trainable state such as running
    statistics; they are checkpointed but never optimized.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._params: Dict[str, Tensor] = {}
        self.moment1: Dict[str, np.ndarray] = {}
        self.moment2: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}
        self.step_count = 0

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __iter__(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._params.items())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already exists")
        tensor = Tensor(np.array(value, dtype=self.dtype), requires_grad=True, name=name)
        self._params[name] = tensor
        self.moment1[name] = np.zeros_like(tensor.data)
        self.moment2[name] = np.zeros_like(tensor.data)
        return tensor

    def add_buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        self.buffers[name] = np.array(value, dtype=self.dtype)
        return self.buffers[name]

    def assign(self, name: str, value: np.ndarray) -> None:
        tensor = self._params[name]
        value = np.asarray(value)
        if value.shape != tensor.shape:
            raise ShapeError(f"{name}: expected shape {tensor.shape}, got {value.shape}")
        tensor.data[...] = value

    def zero_grad(self) -> None:
        for _, tensor in self:
            tensor.zero_grad()

    def count(self) -> int:
        return int(sum(tensor.data.size for _, tensor in self))

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self}

    def copy(self) -> "ParameterSet":
        clone = ParameterSet(dtype=self.dtype)
        for name, tensor in self:
            clone.add(name, tensor.data)
            clone.moment1[name] = self.moment1[name].copy()
            clone.moment2[name] = self.moment2[name].copy()
        clone.buffers = {k: v.copy() for k, v in self.buffers.items()}
        clone.step_count = self.step_count
        return clone

    # Initializers

    def dense(
        self, prefix: str, fan_in: int, fan_out: int, rng: np.random.Generator
    ) -> None:
        """Fan-in scaled uniform weights and bias for a dense layer."""
        bound = 1.0 / math.sqrt(fan_in)
        self.add(f"{prefix}.weight", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        self.add(f"{prefix}.bias", rng.uniform(-bound, bound, size=(fan_out,)))

    def layer_norm(self, prefix: str, features: int) -> None:
        self.add(f"{prefix}.scale", np.ones(features))
        self.add(f"{prefix}.shift", np.zeros(features))

    def xavier(
        self, prefix: str, fan_in: int, fan_out: int, rng: np.random.Generator
    ) -> None:
        """Glorot-uniform weights and zero bias (transformer projections)."""
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        self.add(f"{prefix}.weight", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        self.add(f"{prefix}.bias", np.zeros(fan_out))


def parameter_sets_count(*sets: Optional[ParameterSet]) -> int:
    return sum(s.count() for s in sets if s is not None)
