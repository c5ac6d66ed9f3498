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

"""Cross-entropy objective summed over both users."""

from typing import Optional

import numpy as np

from ..knowledge import bits_to_indices
from ..models.base import EpisodeOutput
from ..nnkernel import ops
from ..nnkernel.tensor import Tensor

SIMPLEX_TOL = 1e-6


def _check_simplex(d: np.ndarray, user: int, tol: float) -> None:
    if np.any(d < -tol):
        raise ValueError(f"prediction for user {user} has negative entries")
    sums = np.sum(d, axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise ValueError(f"prediction for user {user} is off the simplex by {worst:.3g}")


def _user_nll(d, bits, user: int, tol: float) -> float:
    d = np.asarray(d, dtype=np.float64)
    _check_simplex(d, user, tol)
    targets = bits_to_indices(bits)
    if targets.shape != d.shape[:-1]:
        raise ValueError(f"user {user}: bits {np.shape(bits)} do not match predictions {d.shape}")
    if d.shape[-1] != 2 ** np.shape(bits)[-1]:
        raise ValueError(f"user {user}: expected {2 ** np.shape(bits)[-1]} classes, got {d.shape[-1]}")
    picked = np.take_along_axis(d, targets[..., None], axis=-1)[..., 0]
    nll = -np.log(np.maximum(picked, np.finfo(np.float64).tiny))
    if nll.ndim == 0:
        return float(nll)
    # sum over tokens, mean over the batch
    return float(np.mean(nll.reshape(nll.shape[0], -1).sum(axis=1)))


def episode_loss(d1, d2, b1, b2, tol: float = SIMPLEX_TOL) -> float:
    """
    L = -log d1[index(b1)] - log d2[index(b2)].

    Args:
        d1: Predicted distribution(s) for user 1's message, shape (..., 2^M)
        d2: Same for user 2; None for the single-user (ALC) objective
        b1: User 1 bits, shape (..., M)
        b2: User 2 bits (ignored when d2 is None)
        tol: Allowed deviation from the probability simplex

    Returns:
        Batch-averaged loss
    """
    loss = _user_nll(d1, b1, 1, tol)
    if d2 is not None:
        loss += _user_nll(d2, b2, 2, tol)
    return loss


def cross_entropy_loss(output: EpisodeOutput) -> Tensor:
    """Differentiable episode_loss computed from decoder logits."""
    batch = output.targets1.shape[0]
    total: Optional[Tensor] = None
    for logits, targets in ((output.logits1, output.targets1), (output.logits2, output.targets2)):
        if logits is None:
            continue
        term = ops.scale(ops.softmax_cross_entropy(logits, targets, reduction="sum"), 1.0 / batch)
        total = term if total is None else ops.add(total, term)
    if total is None:
        raise ValueError("episode output carries no decoder logits")
    return total
