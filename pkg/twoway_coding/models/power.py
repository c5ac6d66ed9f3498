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

"""Trainable time-indexed power reallocation.

Raw encoder outputs at channel use t are standardized (batch statistics
while training, running statistics when frozen) and scaled by a weight
w_t. The weights are normalized so that sum_t w_t^2 = P * T_M, which makes
the expected episode energy meet the average power budget.
"""

import math
from typing import Optional

import numpy as np

from ..errors import PowerStatisticsError, ShapeError
from ..nnkernel import ops
from ..nnkernel.params import ParameterSet
from ..nnkernel.tensor import Tensor, as_tensor

VARIANCE_FLOOR = 1e-6
WEIGHT_FLOOR = 1e-12

TRAIN = "train"
FROZEN = "frozen"


class PowerReallocator:
    """Per-time-index standardization followed by learned power weights."""

    def __init__(
        self,
        params: ParameterSet,
        prefix: str,
        t_uses: int,
        power: float = 1.0,
        trainable: bool = True,
        momentum: float = 0.1,
        variance_floor: float = VARIANCE_FLOOR,
    ):
        if t_uses < 1:
            raise ValueError("t_uses must be >= 1")
        if not power > 0:
            raise ValueError("power must be positive")
        self.params = params
        self.prefix = prefix
        self.t_uses = t_uses
        self.power = float(power)
        self.trainable = trainable
        self.momentum = momentum
        self.variance_floor = variance_floor
        self.mode = TRAIN

        if trainable and self.weight_name not in params:
            params.add(self.weight_name, np.full(t_uses, math.sqrt(self.power)))
        for name, fill in (("mean", 0.0), ("var", 1.0), ("seen", 0.0)):
            key = f"{prefix}.{name}"
            if key not in params.buffers:
                params.add_buffer(key, np.full(t_uses, fill))

    @property
    def weight_name(self) -> str:
        return f"{self.prefix}.weights"

    @property
    def budget(self) -> float:
        return self.power * self.t_uses

    @property
    def running_mean(self) -> np.ndarray:
        return self.params.buffers[f"{self.prefix}.mean"]

    @property
    def running_var(self) -> np.ndarray:
        return self.params.buffers[f"{self.prefix}.var"]

    @property
    def seen(self) -> np.ndarray:
        return self.params.buffers[f"{self.prefix}.seen"]

    def has_statistics(self, t: Optional[int] = None) -> bool:
        if t is None:
            return bool(np.all(self.seen > 0))
        return bool(self.seen[t] > 0)

    def normalized_weights(self) -> Tensor:
        """w * sqrt(P T_M / sum(w^2)); constant sqrt(P) weights when not trainable."""
        if not self.trainable:
            return ops.constant(np.full(self.t_uses, math.sqrt(self.power)))
        w = self.params[self.weight_name]
        energy = ops.maximum(ops.sum(ops.square(w)), WEIGHT_FLOOR)
        return ops.mul(w, ops.sqrt(ops.div(self.budget, energy)))

    def project(self) -> None:
        """Rescale stored weights onto sum(w^2) = P * T_M (run after each optimizer step)."""
        if not self.trainable:
            return
        w = self.params[self.weight_name].data.astype(np.float64)
        energy = max(float(np.sum(w * w)), WEIGHT_FLOOR)
        self.params.assign(self.weight_name, w * math.sqrt(self.budget / energy))

    def _update_running(self, t: int, mean: float, var: float) -> None:
        if self.seen[t] == 0:
            self.running_mean[t] = mean
            self.running_var[t] = var
        else:
            m = self.momentum
            self.running_mean[t] = (1 - m) * self.running_mean[t] + m * mean
            self.running_var[t] = (1 - m) * self.running_var[t] + m * var
        self.seen[t] += 1


def reallocate(raw, t: int, reallocator: PowerReallocator) -> Tensor:
    """
    Power-constrain the raw symbols of channel use t.

    Args:
        raw: Raw encoder outputs at time t, shape (batch,) or (batch, tokens)
        t: Channel use index in [0, T_M)
        reallocator: Weights and statistics for this encoder

    Returns:
        Standardized symbols scaled by the normalized weight w_t
    """
    raw = as_tensor(raw)
    if not 0 <= t < reallocator.t_uses:
        raise ShapeError(f"channel use {t} outside [0, {reallocator.t_uses})")

    if reallocator.mode == TRAIN:
        if raw.data.size == 0:
            raise ValueError("cannot compute batch statistics of an empty batch")
        mu = ops.mean(raw)
        var = ops.mean(ops.square(ops.sub(raw, mu)))
        reallocator._update_running(t, float(mu.data), float(var.data))
    else:
        if not reallocator.has_statistics(t):
            raise PowerStatisticsError(
                f"{reallocator.prefix}: no running statistics for channel use {t}; "
                "train or calibrate before freezing"
            )
        mu = ops.constant(reallocator.running_mean[t])
        var = ops.constant(reallocator.running_var[t])

    std = ops.sqrt(ops.maximum(var, reallocator.variance_floor))
    standardized = ops.div(ops.sub(raw, mu), std)
    weight = ops.take(reallocator.normalized_weights(), t, axis=0)
    return ops.mul(standardized, weight)
