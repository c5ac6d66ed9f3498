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

"""
Two-way block attention feedback code.

Each user splits its K bits into l = K/M tokens of M bits. Per channel use,
the encoder attends over the l tokens (each with its own sent/received
history) and emits one symbol per token. There is no belief unit and only
time-indexed power reallocation.
"""

from typing import Dict, Optional

import numpy as np

from ...errors import PowerStatisticsError, ShapeError
from ...nnkernel import ops
from ...nnkernel.layers import (
    activation,
    apply_dense,
    apply_layer_norm,
    init_encoder_layer,
    positional_encoding,
    transformer_encoder_layer,
)
from ...nnkernel.params import ParameterSet
from ...nnkernel.tensor import Tensor, as_tensor
from ..base import KnowledgeTrack, ModelKind, TwoWayModel
from ..power import TRAIN, PowerReallocator, reallocate


class TokenCentering:
    """tanh(X - E[X]) with the expectation taken per token column.

    Training uses the batch mean and tracks a running mean per (t, token);
    frozen mode reuses the running mean.
    """

    def __init__(
        self, params: ParameterSet, prefix: str, t_uses: int, tokens: int, momentum: float = 0.1
    ):
        self.params = params
        self.prefix = prefix
        self.t_uses = t_uses
        self.tokens = tokens
        self.momentum = momentum
        self.mode = TRAIN
        if f"{prefix}.mean" not in params.buffers:
            params.add_buffer(f"{prefix}.mean", np.zeros((t_uses, tokens)))
            params.add_buffer(f"{prefix}.seen", np.zeros(t_uses))

    @property
    def running_mean(self) -> np.ndarray:
        return self.params.buffers[f"{self.prefix}.mean"]

    @property
    def seen(self) -> np.ndarray:
        return self.params.buffers[f"{self.prefix}.seen"]

    def __call__(self, x: Tensor, t: int) -> Tensor:
        if self.mode == TRAIN:
            mu = ops.mean(x, axis=0, keepdims=True)
            batch_mean = mu.data[0]
            if self.seen[t] == 0:
                self.running_mean[t] = batch_mean
            else:
                m = self.momentum
                self.running_mean[t] = (1 - m) * self.running_mean[t] + m * batch_mean
            self.seen[t] += 1
        else:
            if self.seen[t] == 0:
                raise PowerStatisticsError(
                    f"{self.prefix}: no running mean for channel use {t}"
                )
            mu = ops.constant(self.running_mean[t][None, :])
        return ops.tanh(ops.sub(x, mu))


def _init_token_features(
    params: ParameterSet, prefix: str, input_dim: int, model_dim: int, rng: np.random.Generator
) -> None:
    params.dense(f"{prefix}.fe1", input_dim, model_dim, rng)
    params.dense(f"{prefix}.fe2", model_dim, model_dim, rng)
    params.dense(f"{prefix}.fe3", model_dim, model_dim, rng)


def _token_features(params: ParameterSet, prefix: str, x, kind: str) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f"{prefix}: expected (batch, tokens, features), got {x.shape}")
    expected = params[f"{prefix}.fe1.weight"].shape[0]
    if x.shape[-1] != expected:
        raise ShapeError(f"{prefix}: token features {x.shape[-1]}, expected {expected}")
    h = activation(apply_dense(params, f"{prefix}.fe1", x), kind)
    h = activation(apply_dense(params, f"{prefix}.fe2", h), kind)
    return apply_dense(params, f"{prefix}.fe3", h)


def _attend(
    params: ParameterSet, prefix: str, h: Tensor, layers: int, heads: int, positional: bool
) -> Tensor:
    if positional:
        h = ops.add(h, positional_encoding(h.shape[1], h.shape[2]))
    for i in range(layers):
        h = transformer_encoder_layer(h, params, f"{prefix}.layer{i}", heads)
    return apply_layer_norm(params, f"{prefix}.norm", h)


def init_twbaf_encoder(
    params: ParameterSet,
    input_dim: int,
    model_dim: int,
    layers: int,
    rng: np.random.Generator,
    prefix: str = "enc",
) -> None:
    _init_token_features(params, prefix, input_dim, model_dim, rng)
    for i in range(layers):
        init_encoder_layer(params, f"{prefix}.layer{i}", model_dim, rng)
    params.layer_norm(f"{prefix}.norm", model_dim)
    params.dense(f"{prefix}.out", model_dim, 1, rng)


def init_twbaf_decoder(
    params: ParameterSet,
    receive_dim: int,
    model_dim: int,
    layers: int,
    classes: int,
    rng: np.random.Generator,
    prefix: str = "dec",
) -> None:
    _init_token_features(params, prefix, receive_dim, model_dim, rng)
    for i in range(layers):
        init_encoder_layer(params, f"{prefix}.layer{i}", model_dim, rng)
    params.layer_norm(f"{prefix}.norm", model_dim)
    params.dense(f"{prefix}.out", model_dim, classes, rng)


def twbaf_raw_symbols(
    params: ParameterSet,
    Q,
    prefix: str = "enc",
    layers: int = 2,
    heads: int = 1,
    positional: bool = True,
    kind: str = "relu",
) -> Tensor:
    """Pre-centering encoder outputs X, shape (batch, tokens)."""
    h = _token_features(params, prefix, Q, kind)
    h = _attend(params, prefix, h, layers, heads, positional)
    out = apply_dense(params, f"{prefix}.out", h)
    return ops.reshape(out, out.shape[:-1])


def twbaf_encode(
    params: ParameterSet,
    Q,
    t: int,
    reallocator: PowerReallocator,
    centering: TokenCentering,
    prefix: str = "enc",
    layers: int = 2,
    heads: int = 1,
    positional: bool = True,
    kind: str = "relu",
) -> Tensor:
    """
    Power-constrained symbols for every token at channel use t.

    Args:
        params: User parameters holding the encoder
        Q: Token matrix, shape (batch, tokens, M + 2(T_M - 1))
        t: Channel use index
        reallocator: Time-indexed power weights of this user
        centering: Per-token tanh centering state
        prefix: Encoder parameter prefix
        layers: Transformer layers L_E
        heads: Attention heads
        positional: Add the sinusoidal table before attention
        kind: Feature-extractor activation

    Returns:
        Tensor of shape (batch, tokens)
    """
    x = twbaf_raw_symbols(params, Q, prefix, layers, heads, positional, kind)
    return reallocate(centering(x, t), t, reallocator)


def twbaf_decoder_logits(
    params: ParameterSet,
    R,
    prefix: str = "dec",
    layers: int = 3,
    heads: int = 1,
    positional: bool = True,
    kind: str = "relu",
) -> Tensor:
    """Per-token logits, shape (batch, tokens, 2^M)."""
    h = _token_features(params, prefix, R, kind)
    h = _attend(params, prefix, h, layers, heads, positional)
    return apply_dense(params, f"{prefix}.out", h)


def twbaf_decode(params: ParameterSet, R, **kwargs) -> Tensor:
    """Per-token posteriors over the 2^M sub-block messages."""
    return ops.softmax(twbaf_decoder_logits(params, R, **kwargs), axis=-1)


class TWBAFModel(TwoWayModel):
    kind = ModelKind.TWBAF

    def _build(self, rng: np.random.Generator, fresh: Dict[int, bool]) -> None:
        spec = self.spec
        self.centerings: Dict[int, TokenCentering] = {}
        for user, power in ((1, spec.power1), (2, spec.power2)):
            params = self.params(user)
            if fresh[user]:
                init_twbaf_encoder(
                    params, spec.input_dim, spec.hidden_dim, spec.encoder_layers, rng
                )
                init_twbaf_decoder(
                    params,
                    spec.receive_dim,
                    spec.hidden_dim,
                    spec.decoder_layers,
                    spec.classes,
                    rng,
                )
            self.reallocators[user] = PowerReallocator(params, "power", spec.t_uses, power)
            self.centerings[user] = TokenCentering(params, "center", spec.t_uses, spec.tokens)

    @property
    def symbol_shape(self):
        return (self.spec.tokens,)

    def _set_mode(self, mode: str) -> None:
        super()._set_mode(mode)
        for centering in self.centerings.values():
            centering.mode = mode

    def encode(self, user: int, track: KnowledgeTrack, t: int) -> Tensor:
        spec = self.spec
        return twbaf_encode(
            self.params(user),
            track.vector(),
            t,
            self.reallocators[user],
            self.centerings[user],
            layers=spec.encoder_layers,
            heads=spec.heads,
            positional=spec.positional,
            kind=spec.activation,
        )

    def decode(self, user: int, track: KnowledgeTrack) -> Optional[Tensor]:
        spec = self.spec
        return twbaf_decoder_logits(
            self.params(user),
            track.receive_vector(),
            layers=spec.decoder_layers,
            heads=spec.heads,
            positional=spec.positional,
            kind=spec.activation,
        )
