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

"""Adam with global-norm clipping and a warmup + step-decay schedule."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import NonFiniteError
from .params import ParameterSet

logger = logging.getLogger(__name__)


def global_grad_norm(param_sets: Sequence[ParameterSet]) -> float:
    total = 0.0
    for params in param_sets:
        for name, tensor in params:
            if not np.all(np.isfinite(tensor.grad)):
                raise NonFiniteError(f"non-finite gradient in parameter {name!r}", name=name)
            total += float(np.sum(np.square(tensor.grad, dtype=np.float64)))
    return math.sqrt(total)


def adam_step(
    param_sets: Sequence[ParameterSet],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    clip_norm: Optional[float] = 1.0,
) -> float:
    """
    Clip gradients to a global norm, then apply one bias-corrected Adam update.

    Moment slots live on each ParameterSet and start at zero; each set keeps
    its own step counter.

    Args:
        param_sets: All parameter sets optimized jointly
        lr: Learning rate
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator guard
        clip_norm: Maximum global gradient norm, or None to disable clipping

    Returns:
        The global gradient norm before clipping
    """
    norm = global_grad_norm(param_sets)
    factor = 1.0
    if clip_norm is not None and norm > clip_norm:
        factor = clip_norm / norm

    for params in param_sets:
        params.step_count += 1
        step = params.step_count
        correction1 = 1.0 - beta1**step
        correction2 = 1.0 - beta2**step
        for name, tensor in params:
            g = tensor.grad.astype(np.float64) * factor
            m = params.moment1[name]
            v = params.moment2[name]
            m[...] = beta1 * m + (1.0 - beta1) * g
            v[...] = beta2 * v + (1.0 - beta2) * g * g
            update = lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
            tensor.data[...] = tensor.data - update
    return norm


@dataclass
class StepDecaySchedule:
    """Linear warmup, then halve the rate when validation stalls.

    ``observe`` is fed the validation sum-BLER at each evaluation; after
    ``patience`` evaluations without a new best the rate is multiplied by
    ``factor``.
    """

    base_lr: float
    warmup_steps: int = 0
    patience: int = 10
    factor: float = 0.5
    min_lr: float = 1e-7

    def __post_init__(self):
        self._scale = 1.0
        self._best = math.inf
        self._stale = 0

    def lr(self, step: int) -> float:
        rate = self.base_lr * self._scale
        if self.warmup_steps > 0 and step < self.warmup_steps:
            rate *= (step + 1) / self.warmup_steps
        return max(rate, self.min_lr) if self.base_lr > 0 else 0.0

    def observe(self, metric: float) -> bool:
        """Record a validation metric; returns True when the rate was decayed."""
        if metric < self._best:
            self._best = metric
            self._stale = 0
            return False
        self._stale += 1
        if self._stale >= self.patience:
            self._scale *= self.factor
            self._stale = 0
            logger.info(f"Validation plateaued; learning rate scale now {self._scale:g}")
            return True
        return False
