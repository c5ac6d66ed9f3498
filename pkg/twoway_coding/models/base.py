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
Common encoder/decoder abstraction shared by every two-way model.

A model owns one ParameterSet per user and knows how to turn a knowledge
track into a power-constrained symbol and a receive track into decoder
logits. ``TwoWayModel.episode`` unrolls the T_M interactive channel uses.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..channel import ChannelConfig, ChannelStreams, EpisodeTrace
from ..errors import ShapeError
from ..knowledge import (
    FeedbackMode,
    KnowledgeVector,
    bits_to_indices,
    indices_to_bits,
)
from ..nnkernel import ops
from ..nnkernel.params import ParameterSet, parameter_sets_count
from ..nnkernel.tensor import Tensor
from .power import FROZEN, TRAIN, PowerReallocator

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    TWLC = "twlc"
    ALC = "alc"
    LC = "lc"
    TWBAF = "twbaf"


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture of one two-way model.

    ``hidden_dim`` is h_c for the LC family and h_b for TWBAF. ``tokens`` is
    the TWBAF sequence length l = K/M and must be 1 for the other kinds.
    """

    kind: ModelKind
    sub_block_len: int
    t_uses: int
    tokens: int = 1
    hidden_dim: int = 32
    head_dim: int = 16
    heads: int = 1
    encoder_layers: int = 2
    decoder_layers: int = 3
    power1: float = 1.0
    power2: float = 1.0
    feedback_mode: FeedbackMode = FeedbackMode.RAW
    activation: str = "relu"
    positional: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "feedback_mode", FeedbackMode(self.feedback_mode))
        if self.sub_block_len < 1 or self.t_uses < 1 or self.tokens < 1:
            raise ValueError("sub_block_len, t_uses and tokens must all be >= 1")
        if self.hidden_dim < 1 or self.head_dim < 1:
            raise ValueError("hidden_dim and head_dim must be >= 1")
        if self.power1 <= 0 or self.power2 <= 0:
            raise ValueError("powers must be positive")
        if self.kind is ModelKind.TWBAF:
            if self.heads < 1 or self.hidden_dim % self.heads != 0:
                raise ShapeError(
                    f"model_dim {self.hidden_dim} is not divisible by {self.heads} heads"
                )
            if self.encoder_layers < 0 or self.decoder_layers < 0:
                raise ValueError("layer counts must be non-negative")
        elif self.tokens != 1:
            raise ValueError(f"{self.kind.value} encodes one sub-block per episode (tokens=1)")

    @property
    def message_len(self) -> int:
        """Bits carried per episode: l * M."""
        return self.tokens * self.sub_block_len

    @property
    def input_dim(self) -> int:
        return self.sub_block_len + 2 * (self.t_uses - 1)

    @property
    def receive_dim(self) -> int:
        return self.sub_block_len + 2 * self.t_uses

    @property
    def classes(self) -> int:
        return 2**self.sub_block_len

    @property
    def single_user(self) -> bool:
        return self.kind in (ModelKind.ALC, ModelKind.LC)


class KnowledgeTrack:
    """Differentiable knowledge state of one user during an episode.

    Vectors follow the layout of ``knowledge.KnowledgeVector.as_array``:
    [bits, sent history, received history], histories zero-padded to
    T_M - 1 slots.
    """

    def __init__(self, bits: np.ndarray, t_uses: int, mode: FeedbackMode = FeedbackMode.RAW):
        self.bits = np.asarray(bits, dtype=np.int64)
        self.t_uses = t_uses
        self.mode = FeedbackMode(mode)
        self.bits_tensor = ops.constant(self.bits.astype(np.float64))
        self.sent: List[Tensor] = []
        self.received: List[Tensor] = []

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.bits.shape[:-1]

    @property
    def filled(self) -> int:
        return len(self.sent)

    def record(self, sent: Tensor, received: Tensor) -> None:
        if self.filled >= self.t_uses:
            raise ValueError(f"track already holds {self.t_uses} channel uses")
        self.sent.append(sent)
        self.received.append(received)

    def _history(self, values: List[Tensor], width: int) -> Tensor:
        values = values[:width]
        parts = []
        if values:
            parts.append(ops.stack(values, axis=-1))
        if width > len(values):
            parts.append(ops.constant(np.zeros(self.batch_shape + (width - len(values),))))
        return ops.concat(parts, axis=-1)

    def _feedback(self) -> List[Tensor]:
        if self.mode is FeedbackMode.RESIDUAL:
            return [ops.sub(y, c) for c, y in zip(self.sent, self.received)]
        return self.received

    def vector(self) -> Tensor:
        """q_i^t for the next channel use."""
        width = self.t_uses - 1
        if width == 0:
            return self.bits_tensor
        return ops.concat(
            [self.bits_tensor, self._history(self.sent, width), self._history(self._feedback(), width)],
            axis=-1,
        )

    def receive_vector(self, include_bits: bool = True) -> Tensor:
        """r_i = [b_i, y_i, c_i] once all T_M uses are recorded."""
        if self.filled != self.t_uses:
            raise ValueError(f"receive vector needs {self.t_uses} uses, have {self.filled}")
        parts = [ops.stack(self.received, axis=-1), ops.stack(self.sent, axis=-1)]
        if include_bits:
            parts.insert(0, self.bits_tensor)
        return ops.concat(parts, axis=-1)

    def snapshot(self) -> KnowledgeVector:
        """Plain-array view of the current knowledge vector."""
        width = self.t_uses - 1
        if width == 0:
            empty = np.zeros(self.batch_shape + (0,))
            return KnowledgeVector(bits=self.bits, sent_history=empty, recv_history=empty)
        return KnowledgeVector(
            bits=self.bits,
            sent_history=self._history(self.sent, width).data.copy(),
            recv_history=self._history(self._feedback(), width).data.copy(),
            filled=min(self.filled, width),
        )


@dataclass
class EpisodeOutput:
    """Decoder logits for both messages plus the channel trace.

    ``logits1`` estimates user 1's message (decoded at user 2) and
    ``logits2`` user 2's; single-user models leave ``logits2`` as None.
    """

    logits1: Optional[Tensor]
    logits2: Optional[Tensor]
    targets1: np.ndarray
    targets2: Optional[np.ndarray]
    trace: EpisodeTrace
    tracks: Tuple[KnowledgeTrack, KnowledgeTrack]

    def logits(self, user: int) -> Optional[Tensor]:
        if user not in (1, 2):
            raise ValueError(f"user must be 1 or 2, got {user}")
        return self.logits1 if user == 1 else self.logits2

    def probabilities(self, user: int) -> Optional[np.ndarray]:
        logits = self.logits(user)
        if logits is None:
            return None
        shifted = logits.data - np.max(logits.data, axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / np.sum(e, axis=-1, keepdims=True)

    def decoded_indices(self, user: int) -> Optional[np.ndarray]:
        logits = self.logits(user)
        if logits is None:
            return None
        return np.argmax(logits.data, axis=-1)

    def decoded_bits(self, user: int, sub_block_len: int) -> Optional[np.ndarray]:
        """Hard decisions flattened back to (batch, l * M)."""
        indices = self.decoded_indices(user)
        if indices is None:
            return None
        bits = indices_to_bits(indices, sub_block_len)
        return bits.reshape(bits.shape[0], -1)


class TwoWayModel(ABC):
    """Both users' encoders and decoders for one architecture."""

    kind: ModelKind

    def __init__(
        self,
        spec: EncoderSpec,
        params1: Optional[ParameterSet] = None,
        params2: Optional[ParameterSet] = None,
        seed: int = 0,
        dtype=np.float32,
    ):
        if spec.kind is not self.kind:
            raise ValueError(f"{type(self).__name__} cannot build a {spec.kind.value} spec")
        self.spec = spec
        fresh = {1: params1 is None, 2: params2 is None}
        self.params1 = params1 if params1 is not None else ParameterSet(dtype=dtype)
        self.params2 = params2 if params2 is not None else ParameterSet(dtype=dtype)
        self.reallocators: Dict[int, PowerReallocator] = {}
        self._build(np.random.default_rng(seed), fresh)
        self.training = True

    @abstractmethod
    def _build(self, rng: np.random.Generator, fresh: Dict[int, bool]) -> None:
        """Initialize parameters of fresh sets and attach reallocators."""

    @abstractmethod
    def encode(self, user: int, track: KnowledgeTrack, t: int) -> Tensor:
        """Power-constrained symbol(s) of ``user`` at channel use t."""

    @abstractmethod
    def decode(self, user: int, track: KnowledgeTrack) -> Optional[Tensor]:
        """Logits for the other user's message, decoded at ``user``."""

    @property
    def symbol_shape(self) -> Tuple[int, ...]:
        return ()

    @property
    def param_sets(self) -> List[ParameterSet]:
        return [self.params1, self.params2]

    def params(self, user: int) -> ParameterSet:
        if user == 1:
            return self.params1
        if user == 2:
            return self.params2
        raise ValueError(f"user must be 1 or 2, got {user}")

    def train(self) -> "TwoWayModel":
        self.training = True
        self._set_mode(TRAIN)
        return self

    def eval(self) -> "TwoWayModel":
        self.training = False
        self._set_mode(FROZEN)
        return self

    def _set_mode(self, mode: str) -> None:
        for reallocator in self.reallocators.values():
            reallocator.mode = mode

    def project_power(self) -> None:
        for reallocator in self.reallocators.values():
            reallocator.project()

    def power_weights(self, user: int) -> Optional[np.ndarray]:
        reallocator = self.reallocators.get(user)
        if reallocator is None:
            return None
        return reallocator.normalized_weights().data.copy()

    def parameter_count(self) -> int:
        return parameter_sets_count(*self.param_sets)

    def encoder_bits(self, user: int, bits: np.ndarray) -> np.ndarray:
        """Bits placed in the user's knowledge vector."""
        if self.spec.single_user and user == 2:
            return np.zeros_like(bits)
        return bits

    def shape_message(self, bits) -> np.ndarray:
        """(batch, l * M) bits as (batch, M) or (batch, l, M)."""
        bits = np.asarray(bits, dtype=np.int64)
        if bits.ndim == 1:
            bits = bits[None, :]
        if bits.ndim != 2 or bits.shape[1] != self.spec.message_len:
            raise ShapeError(
                f"expected messages of shape (batch, {self.spec.message_len}), got {bits.shape}"
            )
        if bits.shape[0] == 0:
            raise ShapeError("empty message batch")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("bits must be 0 or 1")
        if self.symbol_shape:
            return bits.reshape(bits.shape[0], self.spec.tokens, self.spec.sub_block_len)
        return bits

    def _time_major(self, values: List[Tensor]) -> np.ndarray:
        """Stack per-use symbols into (batch, T) with index t * l + token."""
        stacked = np.stack([v.data for v in values], axis=1).astype(np.float64)
        return stacked.reshape(stacked.shape[0], -1)

    def episode(
        self,
        b1,
        b2,
        channel: ChannelConfig,
        streams: Optional[ChannelStreams] = None,
        noise: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    ) -> EpisodeOutput:
        """
        Unroll T_M interactive channel uses and decode both directions.

        Args:
            b1: User 1 messages, shape (batch, l * M)
            b2: User 2 messages; ignored (all-zero) for single-user models
            channel: Noise variances of both directions
            streams: Noise source when ``noise`` is not given
            noise: Optional pre-drawn (n1, n2), each (batch, *symbol_shape, T_M)

        Returns:
            EpisodeOutput with logits, targets, trace and final tracks
        """
        spec = self.spec
        b1 = self.shape_message(b1)
        if spec.single_user:
            b2 = np.zeros_like(b1)
        else:
            b2 = self.shape_message(b2)
            if b2.shape != b1.shape:
                raise ShapeError(f"message batches differ: {b1.shape} vs {b2.shape}")

        noise_shape = (b1.shape[0],) + self.symbol_shape + (spec.t_uses,)
        if noise is None:
            if streams is None:
                raise ValueError("episode needs either streams or pre-drawn noise")
            n1, n2 = streams.draw_noise(noise_shape, channel)
        else:
            n1, n2 = (np.asarray(n, dtype=np.float64) for n in noise)
            if n1.shape != noise_shape or n2.shape != noise_shape:
                raise ShapeError(f"noise must have shape {noise_shape}")

        track1 = KnowledgeTrack(self.encoder_bits(1, b1), spec.t_uses, spec.feedback_mode)
        track2 = KnowledgeTrack(self.encoder_bits(2, b2), spec.t_uses, spec.feedback_mode)
        for t in range(spec.t_uses):
            c1 = self.encode(1, track1, t)
            c2 = self.encode(2, track2, t)
            y2 = ops.add(c1, ops.constant(n1[..., t]))
            y1 = ops.add(c2, ops.constant(n2[..., t]))
            track1.record(c1, y1)
            track2.record(c2, y2)

        logits_for_b2 = self.decode(1, track1)
        logits_for_b1 = self.decode(2, track2)

        trace = EpisodeTrace(
            sent1=self._time_major(track1.sent),
            sent2=self._time_major(track2.sent),
            received1=self._time_major(track1.received),
            received2=self._time_major(track2.received),
            noise1=np.moveaxis(n1, -1, 1).reshape(n1.shape[0], -1),
            noise2=np.moveaxis(n2, -1, 1).reshape(n2.shape[0], -1),
            weights1=self.power_weights(1),
            weights2=self.power_weights(2),
        )
        return EpisodeOutput(
            logits1=logits_for_b1,
            logits2=None if spec.single_user else logits_for_b2,
            targets1=bits_to_indices(b1),
            targets2=None if spec.single_user else bits_to_indices(b2),
            trace=trace,
            tracks=(track1, track2),
        )
