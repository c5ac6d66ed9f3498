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
Model factory for building two-way models from an EncoderSpec.
"""

import logging
from typing import Dict, Optional, Type

import numpy as np

from ..channel import ChannelConfig, ChannelStreams
from ..nnkernel.params import ParameterSet
from .alc.model import ALCModel, LCModel
from .base import EncoderSpec, EpisodeOutput, ModelKind, TwoWayModel
from .twbaf.model import TWBAFModel
from .twlc.model import TWLCModel

logger = logging.getLogger(__name__)

MODEL_CLASSES: Dict[ModelKind, Type[TwoWayModel]] = {
    ModelKind.TWLC: TWLCModel,
    ModelKind.ALC: ALCModel,
    ModelKind.LC: LCModel,
    ModelKind.TWBAF: TWBAFModel,
}


def create_model(
    spec: EncoderSpec,
    params1: Optional[ParameterSet] = None,
    params2: Optional[ParameterSet] = None,
    seed: int = 0,
    dtype=np.float32,
) -> TwoWayModel:
    """
    Create a two-way model, initializing any parameter set not supplied.

    Args:
        spec: Architecture and dimensions
        params1: Existing parameters of user 1 (e.g. from a checkpoint)
        params2: Existing parameters of user 2
        seed: Initialization seed for fresh parameter sets
        dtype: Storage dtype of fresh parameter sets

    Returns:
        Configured TwoWayModel
    """
    model_class = MODEL_CLASSES[ModelKind(spec.kind)]
    model = model_class(spec, params1=params1, params2=params2, seed=seed, dtype=dtype)
    if params1 is None or params2 is None:
        logger.info(
            f"Initialized {spec.kind.value} model with {model.parameter_count()} parameters "
            f"(seed={seed})"
        )
    return model


def episode_forward(
    params1: ParameterSet,
    params2: ParameterSet,
    b1,
    b2,
    channel: ChannelConfig,
    spec: EncoderSpec,
    streams: Optional[ChannelStreams] = None,
    noise=None,
    training: bool = True,
) -> EpisodeOutput:
    """
    Run one batch of interactive episodes with the given parameters.

    Args:
        params1: User 1 parameters
        params2: User 2 parameters
        b1: User 1 messages, shape (batch, l * M)
        b2: User 2 messages (ignored by single-user kinds)
        channel: Channel noise variances
        spec: Architecture the parameters belong to
        streams: Noise source when ``noise`` is not given
        noise: Optional pre-drawn (n1, n2)
        training: Batch statistics (True) or frozen running statistics

    Returns:
        EpisodeOutput with both decoders' logits and the trace
    """
    model = create_model(spec, params1, params2)
    if training:
        model.train()
    else:
        model.eval()
    return model.episode(b1, b2, channel, streams=streams, noise=noise)


def parameter_count(spec: EncoderSpec) -> int:
    """Trainable parameters of both users for a freshly built model."""
    return create_model(spec).parameter_count()

