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

"""Central finite-difference checks of tape gradients."""

from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .params import ParameterSet
from .tensor import Tape, Tensor, backward


def _flatten(targets: Sequence[Union[Tensor, ParameterSet]]) -> List[Tensor]:
    tensors: List[Tensor] = []
    for target in targets:
        if isinstance(target, ParameterSet):
            tensors.extend(tensor for _, tensor in target)
        else:
            tensors.append(target)
    return tensors


def gradient_check(
    loss_fn: Callable[[], Tensor],
    targets: Sequence[Union[Tensor, ParameterSet]],
    eps: float = 1e-6,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compare tape gradients with central differences.

    Args:
        loss_fn: Zero-argument callable returning a scalar Tensor; must be deterministic
        targets: Leaf tensors and/or parameter sets to differentiate
        eps: Finite-difference step
        max_entries: Optional cap on perturbed entries per tensor (sampled)
        seed: Sampling seed for max_entries

    Returns:
        ||g_tape - g_fd|| / (||g_tape|| + ||g_fd||), 0 when both vanish
    """
    tensors = _flatten(targets)
    for tensor in tensors:
        if tensor.grad is None:
            tensor.requires_grad = True
            tensor.grad = np.zeros_like(tensor.data)
        tensor.zero_grad()

    with Tape() as tape:
        loss = loss_fn()
    backward(tape, loss)

    rng = np.random.default_rng(seed)
    analytic, numeric = [], []
    for tensor in tensors:
        size = tensor.data.size
        indices = np.arange(size)
        if max_entries is not None and size > max_entries:
            indices = rng.choice(size, size=max_entries, replace=False)
        flat = tensor.data.reshape(-1)
        for index in indices:
            original = flat[index]
            flat[index] = original + eps
            plus = float(loss_fn().data)
            flat[index] = original - eps
            minus = float(loss_fn().data)
            flat[index] = original
            numeric.append((plus - minus) / (2.0 * eps))
            analytic.append(float(tensor.grad.reshape(-1)[index]))

    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)
