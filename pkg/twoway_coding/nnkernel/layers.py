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

"""Layers used by the LightCode- and GBAF-style models."""

import math
from typing import Optional

import numpy as np

from ..errors import ShapeError
from . import ops
from .params import ParameterSet
from .tensor import Tensor, as_tensor, make_result

ACTIVATIONS = {
    "relu": ops.relu,
    "gelu": ops.gelu,
    "tanh": ops.tanh,
}


def dense(x, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """y = x W + b."""
    x = as_tensor(x)
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError(
            f"dense: input features {x.shape[-1]} do not match weight {weight.shape}"
        )
    y = ops.matmul(x, weight)
    if bias is not None:
        y = ops.add(y, bias)
    return y


def apply_dense(params: ParameterSet, prefix: str, x) -> Tensor:
    return dense(x, params[f"{prefix}.weight"], params[f"{prefix}.bias"])


def activation(x, kind: str) -> Tensor:
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; choose from {sorted(ACTIVATIONS)}")
    return fn(x)


def layer_norm(x, scale: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Standardize over the last axis, then apply the affine scale/shift."""
    x, scale, shift = as_tensor(x), as_tensor(scale), as_tensor(shift)
    if x.shape[-1] < 1:
        raise ShapeError("layer_norm needs at least one feature")
    mu = np.mean(x.data, axis=-1, keepdims=True)
    centered = x.data - mu
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * scale.data + shift.data
    n = x.shape[-1]

    def vjp(g):
        dxhat = g * scale.data
        dx = (inv / n) * (
            n * dxhat
            - np.sum(dxhat, axis=-1, keepdims=True)
            - xhat * np.sum(dxhat * xhat, axis=-1, keepdims=True)
        )
        dscale = (g * xhat).reshape(-1, n).sum(axis=0).reshape(scale.shape)
        dshift = g.reshape(-1, n).sum(axis=0).reshape(shift.shape)
        return dx, dscale, dshift

    return make_result("layer_norm", out, (x, scale, shift), vjp)


def apply_layer_norm(params: ParameterSet, prefix: str, x, eps: float = 1e-5) -> Tensor:
    return layer_norm(x, params[f"{prefix}.scale"], params[f"{prefix}.shift"], eps)


def positional_encoding(seq_len: int, model_dim: int) -> Tensor:
    """Sinusoidal table: sin on even feature indices, cos on odd ones."""
    if seq_len < 1 or model_dim < 1:
        raise ValueError("positional_encoding needs seq_len >= 1 and model_dim >= 1")
    positions = np.arange(seq_len, dtype=np.float64)[:, None]
    dims = np.arange(model_dim)
    rates = 1.0 / np.power(10000.0, (2 * (dims // 2)) / model_dim)
    angles = positions * rates[None, :]
    table = np.where(dims % 2 == 0, np.sin(angles), np.cos(angles))
    return ops.constant(table)


def init_attention(
    params: ParameterSet, prefix: str, model_dim: int, rng: np.random.Generator
) -> None:
    for name in ("query", "key", "value", "output"):
        params.xavier(f"{prefix}.{name}", model_dim, model_dim, rng)


def multi_head_self_attention(
    x, params: ParameterSet, prefix: str, heads: int, return_weights: bool = False
):
    """
    Scaled dot-product self-attention over the token axis.

    Args:
        x: (batch, tokens, model_dim)
        params: ParameterSet holding {prefix}.{query,key,value,output} projections
        prefix: Parameter name prefix
        heads: Number of heads; must divide model_dim
        return_weights: Also return the (batch, heads, tokens, tokens) attention weights

    Returns:
        (batch, tokens, model_dim) tensor, optionally with the attention weights
    """
    x = as_tensor(x)
    batch, tokens, model_dim = x.shape
    if heads < 1 or model_dim % heads != 0:
        raise ShapeError(f"model_dim {model_dim} is not divisible by {heads} heads")
    head_dim = model_dim // heads

    def split_heads(t: Tensor) -> Tensor:
        t = ops.reshape(t, (batch, tokens, heads, head_dim))
        return ops.transpose(t, (0, 2, 1, 3))

    q = split_heads(apply_dense(params, f"{prefix}.query", x))
    k = split_heads(apply_dense(params, f"{prefix}.key", x))
    v = split_heads(apply_dense(params, f"{prefix}.value", x))

    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(head_dim))
    weights = ops.softmax(scores, axis=-1)
    context = ops.matmul(weights, v)
    context = ops.reshape(ops.transpose(context, (0, 2, 1, 3)), (batch, tokens, model_dim))
    out = apply_dense(params, f"{prefix}.output", context)
    if return_weights:
        return out, weights
    return out


def init_encoder_layer(
    params: ParameterSet, prefix: str, model_dim: int, rng: np.random.Generator, expansion: int = 4
) -> None:
    params.layer_norm(f"{prefix}.norm1", model_dim)
    init_attention(params, f"{prefix}.attn", model_dim, rng)
    params.layer_norm(f"{prefix}.norm2", model_dim)
    params.xavier(f"{prefix}.ff1", model_dim, expansion * model_dim, rng)
    params.xavier(f"{prefix}.ff2", expansion * model_dim, model_dim, rng)


def transformer_encoder_layer(x, params: ParameterSet, prefix: str, heads: int) -> Tensor:
    """Pre-norm block: x + MHSA(LN(x)), then x + FF(LN(x)) with GELU."""
    h = apply_layer_norm(params, f"{prefix}.norm1", x)
    x = ops.add(x, multi_head_self_attention(h, params, f"{prefix}.attn", heads))
    h = apply_layer_norm(params, f"{prefix}.norm2", x)
    h = apply_dense(params, f"{prefix}.ff2", ops.gelu(apply_dense(params, f"{prefix}.ff1", h)))
    return ops.add(x, h)
