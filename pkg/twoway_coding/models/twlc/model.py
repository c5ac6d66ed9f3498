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

"""Two-way lightweight code: one symbol per sub-block per channel use."""

from typing import Dict, Optional

import numpy as np

from ...errors import ShapeError
from ...nnkernel import ops
from ...nnkernel.layers import activation, apply_dense, apply_layer_norm
from ...nnkernel.params import ParameterSet
from ...nnkernel.tensor import Tensor, as_tensor
from ..base import KnowledgeTrack, ModelKind, TwoWayModel
from ..power import PowerReallocator, reallocate


def init_feature_extractor(
    params: ParameterSet, prefix: str, input_dim: int, hidden: int, rng: np.random.Generator
) -> None:
    params.dense(f"{prefix}.fe1", input_dim, hidden, rng)
    params.dense(f"{prefix}.fe2", hidden, hidden, rng)
    params.dense(f"{prefix}.fe3", hidden, hidden, rng)
    params.layer_norm(f"{prefix}.norm", hidden)


def feature_extractor(params: ParameterSet, prefix: str, x, kind: str = "relu") -> Tensor:
    """Three dense layers with a first-to-last skip connection, then layer norm."""
    x = as_tensor(x)
    expected = params[f"{prefix}.fe1.weight"].shape[0]
    if x.shape[-1] != expected:
        raise ShapeError(f"{prefix}: input length {x.shape[-1]}, expected {expected}")
    h1 = activation(apply_dense(params, f"{prefix}.fe1", x), kind)
    h2 = activation(apply_dense(params, f"{prefix}.fe2", h1), kind)
    h3 = ops.add(apply_dense(params, f"{prefix}.fe3", h2), h1)
    return apply_layer_norm(params, f"{prefix}.norm", h3)


def init_twlc_encoder(
    params: ParameterSet,
    input_dim: int,
    hidden: int,
    head: int,
    rng: np.random.Generator,
    prefix: str = "enc",
) -> None:
    init_feature_extractor(params, prefix, input_dim, hidden, rng)
    params.dense(f"{prefix}.head1", hidden, head, rng)
    params.dense(f"{prefix}.head2", head, 1, rng)


def init_twlc_decoder(
    params: ParameterSet,
    receive_dim: int,
    hidden: int,
    classes: int,
    rng: np.random.Generator,
    prefix: str = "dec",
) -> None:
    init_feature_extractor(params, prefix, receive_dim, hidden, rng)
    params.dense(f"{prefix}.head1", hidden, hidden, rng)
    params.dense(f"{prefix}.head2", hidden, classes, rng)


def twlc_encode(params: ParameterSet, q, prefix: str = "enc", kind: str = "relu") -> Tensor:
    """
    Raw (pre-reallocation) symbol for each knowledge vector in the batch.

    Args:
        params: User parameters holding the encoder
        q: Knowledge vectors, shape (batch, M + 2(T_M - 1))
        prefix: Encoder parameter prefix
        kind: Hidden activation

    Returns:
        Tensor of shape (batch,)
    """
    h = feature_extractor(params, prefix, q, kind)
    z = activation(apply_dense(params, f"{prefix}.head1", h), kind)
    out = apply_dense(params, f"{prefix}.head2", z)
    return ops.reshape(out, out.shape[:-1])


def twlc_decoder_logits(
    params: ParameterSet, r, prefix: str = "dec", kind: str = "relu"
) -> Tensor:
    """Logits over the 2^M sub-block messages, shape (batch, 2^M)."""
    h = feature_extractor(params, prefix, r, kind)
    z = activation(apply_dense(params, f"{prefix}.head1", h), kind)
    return apply_dense(params, f"{prefix}.head2", z)


def twlc_decode(params: ParameterSet, r, prefix: str = "dec", kind: str = "relu") -> Tensor:
    """Posterior over the 2^M sub-block messages."""
    return ops.softmax(twlc_decoder_logits(params, r, prefix, kind), axis=-1)


class TWLCModel(TwoWayModel):
    """Symmetric model: both users carry a message, an encoder and a decoder."""

    kind = ModelKind.TWLC

    def _build(self, rng: np.random.Generator, fresh: Dict[int, bool]) -> None:
        spec = self.spec
        for user, power in ((1, spec.power1), (2, spec.power2)):
            params = self.params(user)
            if fresh[user]:
                init_twlc_encoder(params, spec.input_dim, spec.hidden_dim, spec.head_dim, rng)
                init_twlc_decoder(params, spec.receive_dim, spec.hidden_dim, spec.classes, rng)
            self.reallocators[user] = PowerReallocator(params, "power", spec.t_uses, power)

    def encode(self, user: int, track: KnowledgeTrack, t: int) -> Tensor:
        raw = twlc_encode(self.params(user), track.vector(), kind=self.spec.activation)
        return reallocate(raw, t, self.reallocators[user])

    def decode(self, user: int, track: KnowledgeTrack) -> Optional[Tensor]:
        return twlc_decoder_logits(
            self.params(user), track.receive_vector(), kind=self.spec.activation
        )
