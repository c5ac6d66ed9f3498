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
One-way feedback codes run on the two-way machinery.

ALC (active feedback): user 2 holds no message; its feedback encoder sees
a knowledge vector with all-zero bits and its single decoder is fed only
[y_2, c_2]. LC (passive feedback): user 2 echoes its previous received
symbol through a fixed uniform power allocation.
"""

from typing import Dict, Optional

import numpy as np

from ...channel import ChannelConfig, ChannelStreams
from ...nnkernel import ops
from ...nnkernel.tensor import Tensor
from ..base import EpisodeOutput, KnowledgeTrack, ModelKind, TwoWayModel
from ..power import PowerReallocator, reallocate
from ..twlc.model import (
    init_twlc_decoder,
    init_twlc_encoder,
    twlc_decoder_logits,
    twlc_encode,
)


class ALCModel(TwoWayModel):
    """Forward encoder at user 1; feedback encoder and decoder at user 2."""

    kind = ModelKind.ALC

    def _build(self, rng: np.random.Generator, fresh: Dict[int, bool]) -> None:
        spec = self.spec
        if fresh[1]:
            init_twlc_encoder(self.params1, spec.input_dim, spec.hidden_dim, spec.head_dim, rng)
        if fresh[2]:
            self._init_feedback(rng)
            init_twlc_decoder(
                self.params2, 2 * spec.t_uses, spec.hidden_dim, spec.classes, rng
            )
        self.reallocators[1] = PowerReallocator(self.params1, "power", spec.t_uses, spec.power1)
        self._attach_feedback_power()

    def _init_feedback(self, rng: np.random.Generator) -> None:
        spec = self.spec
        init_twlc_encoder(self.params2, spec.input_dim, spec.hidden_dim, spec.head_dim, rng)

    def _attach_feedback_power(self) -> None:
        spec = self.spec
        self.reallocators[2] = PowerReallocator(self.params2, "power", spec.t_uses, spec.power2)

    def encode(self, user: int, track: KnowledgeTrack, t: int) -> Tensor:
        raw = twlc_encode(self.params(user), track.vector(), kind=self.spec.activation)
        return reallocate(raw, t, self.reallocators[user])

    def decode(self, user: int, track: KnowledgeTrack) -> Optional[Tensor]:
        if user == 1:
            return None
        return twlc_decoder_logits(
            self.params2, track.receive_vector(include_bits=False), kind=self.spec.activation
        )


class LCModel(ALCModel):
    """Passive feedback: user 2 returns its last received symbol."""

    kind = ModelKind.LC

    def _init_feedback(self, rng: np.random.Generator) -> None:
        pass

    def _attach_feedback_power(self) -> None:
        spec = self.spec
        self.reallocators[2] = PowerReallocator(
            self.params2, "power", spec.t_uses, spec.power2, trainable=False
        )

    def encode(self, user: int, track: KnowledgeTrack, t: int) -> Tensor:
        if user == 1:
            return super().encode(user, track, t)
        if track.received:
            echo = track.received[-1]
        else:
            # nothing received before the first use
            echo = ops.constant(np.zeros(track.batch_shape))
        return reallocate(echo, t, self.reallocators[2])


def alc_episode(
    model: ALCModel,
    b1,
    channel: ChannelConfig,
    streams: Optional[ChannelStreams] = None,
    noise=None,
) -> EpisodeOutput:
    """
    Run one batch of feedback-coded episodes for user 1's messages.

    Args:
        model: ALC or LC model
        b1: User 1 messages, shape (batch, M)
        channel: Forward (user 1) and feedback (user 2) noise variances
        streams: Noise source when ``noise`` is not given
        noise: Optional pre-drawn (n1, n2)

    Returns:
        EpisodeOutput whose ``logits1`` is the decoded distribution for b1
    """
    if not isinstance(model, ALCModel):
        raise TypeError(f"alc_episode needs an ALC or LC model, got {type(model).__name__}")
    return model.episode(b1, None, channel, streams=streams, noise=noise)
