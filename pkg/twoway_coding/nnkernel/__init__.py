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

"""Minimal reverse-mode differentiation engine and layers."""

from . import ops
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .layers import (
    activation,
    dense,
    layer_norm,
    multi_head_self_attention,
    positional_encoding,
    transformer_encoder_layer,
)
from .ops import softmax, softmax_cross_entropy
from .optim import StepDecaySchedule, adam_step
from .params import ParameterSet
from .tensor import Tape, Tensor, backward, current_tape

__all__ = [
    "ops",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "gradient_check",
    "activation",
    "dense",
    "layer_norm",
    "multi_head_self_attention",
    "positional_encoding",
    "transformer_encoder_layer",
    "softmax",
    "softmax_cross_entropy",
    "StepDecaySchedule",
    "adam_step",
    "ParameterSet",
    "Tape",
    "Tensor",
    "backward",
    "current_tape",
]
