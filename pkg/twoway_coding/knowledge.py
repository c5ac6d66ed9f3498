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

"""Knowledge vectors, receive vectors and bitstream helpers.

A transmit-side knowledge vector for a sub-block of M bits coded over T_M
channel uses is laid out as

    [bits (M) | c^1 .. c^{t-1}, 0 .. 0 (T_M - 1) | y^1 .. y^{t-1}, 0 .. 0 (T_M - 1)]

All values carry optional leading batch dimensions.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np


class FeedbackMode(str, Enum):
    """What a user stores as 'received' history."""

    RAW = "raw"
    RESIDUAL = "residual"


def _as_bits(bits) -> np.ndarray:
    array = np.asarray(bits)
    if array.ndim == 0 or array.shape[-1] == 0:
        raise ValueError("a message must contain at least one bit")
    if not np.all((array == 0) | (array == 1)):
        raise ValueError("bits must be 0 or 1")
    return array.astype(np.int64)


@dataclass(frozen=True)
class KnowledgeVector:
    """Transmit-side encoder input q_i^t."""

    bits: np.ndarray
    sent_history: np.ndarray
    recv_history: np.ndarray
    filled: int = 0

    @property
    def message_len(self) -> int:
        return int(self.bits.shape[-1])

    @property
    def t_uses(self) -> int:
        return int(self.sent_history.shape[-1]) + 1

    def __len__(self) -> int:
        return self.message_len + 2 * (self.t_uses - 1)

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [self.bits.astype(np.float64), self.sent_history, self.recv_history], axis=-1
        )


@dataclass(frozen=True)
class ReceiveVector:
    """Receive-side decoder input r_i = [b_i, y_i, c_i]."""

    bits: np.ndarray
    received: np.ndarray
    sent: np.ndarray

    def __len__(self) -> int:
        return int(self.bits.shape[-1] + self.received.shape[-1] + self.sent.shape[-1])

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [self.bits.astype(np.float64), self.received, self.sent], axis=-1
        )


def init_knowledge(bits, t_uses: int) -> KnowledgeVector:
    """
    Knowledge vector before the first channel use.

    Args:
        bits: Message bits, shape (..., M)
        t_uses: Channel uses T_M for this sub-block

    Returns:
        KnowledgeVector with all-zero histories
    """
    bits = _as_bits(bits)
    if t_uses < 1:
        raise ValueError(f"t_uses must be >= 1, got {t_uses}")
    history_shape = bits.shape[:-1] + (t_uses - 1,)
    return KnowledgeVector(
        bits=bits.copy(),
        sent_history=np.zeros(history_shape),
        recv_history=np.zeros(history_shape),
        filled=0,
    )


def update_knowledge(
    q: KnowledgeVector, c_t, y_t, mode: FeedbackMode = FeedbackMode.RAW
) -> KnowledgeVector:
    """
    Record one channel use into the next free history slots.

    Args:
        q: Current knowledge vector
        c_t: Symbol(s) this user just sent
        y_t: Symbol(s) this user just received
        mode: RAW stores y_t, RESIDUAL stores y_t - c_t

    Returns:
        New KnowledgeVector with ``filled`` incremented
    """
    if q.filled >= q.t_uses - 1:
        raise ValueError(
            f"knowledge vector already holds {q.filled} of {q.t_uses - 1} history slots"
        )
    c_t = np.asarray(c_t, dtype=np.float64)
    y_t = np.asarray(y_t, dtype=np.float64)
    received = y_t - c_t if FeedbackMode(mode) is FeedbackMode.RESIDUAL else y_t

    sent_history = q.sent_history.copy()
    recv_history = q.recv_history.copy()
    sent_history[..., q.filled] = c_t
    recv_history[..., q.filled] = received
    return KnowledgeVector(
        bits=q.bits,
        sent_history=sent_history,
        recv_history=recv_history,
        filled=q.filled + 1,
    )


def build_receive_vector(bits, received, sent) -> ReceiveVector:
    """Form r_i = [b_i, y_i, c_i]; y_i and c_i must both span T_M uses."""
    bits = _as_bits(bits)
    received = np.asarray(received, dtype=np.float64)
    sent = np.asarray(sent, dtype=np.float64)
    if received.shape != sent.shape:
        raise ValueError(
            f"received {received.shape} and sent {sent.shape} lengths differ"
        )
    if received.ndim == 0 or received.shape[-1] == 0:
        raise ValueError("received/sent must cover at least one channel use")
    return ReceiveVector(bits=bits, received=received, sent=sent)


def bits_to_index(bits) -> int:
    """Big-endian value of a bit vector (bits[0] is the most significant)."""
    bits = _as_bits(bits)
    if bits.ndim != 1:
        raise ValueError("bits_to_index expects a single bit vector")
    index = 0
    for bit in bits:
        index = (index << 1) | int(bit)
    return index


def index_to_bits(k: int, m: int) -> np.ndarray:
    """Inverse of bits_to_index for messages of length m."""
    if m < 1:
        raise ValueError(f"message length must be >= 1, got {m}")
    if not 0 <= k < 2**m:
        raise ValueError(f"index {k} outside [0, {2 ** m})")
    return np.array([(k >> (m - 1 - i)) & 1 for i in range(m)], dtype=np.int64)


def bits_to_indices(bits) -> np.ndarray:
    """Vectorized bits_to_index over leading dimensions."""
    bits = _as_bits(bits)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def indices_to_bits(indices, m: int) -> np.ndarray:
    """Vectorized index_to_bits over an integer array."""
    indices = np.asarray(indices, dtype=np.int64)
    if np.any(indices < 0) or np.any(indices >= 2**m):
        raise ValueError(f"indices outside [0, {2 ** m})")
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return (indices[..., None] >> shifts) & 1


def split_subblocks(bits, m: int) -> List[np.ndarray]:
    """Split (..., K) bits into K/M ordered (..., M) sub-blocks."""
    bits = _as_bits(bits)
    k = bits.shape[-1]
    if m < 1 or k % m != 0:
        raise ValueError(f"sub-block length {m} does not divide message length {k}")
    return [bits[..., i : i + m].copy() for i in range(0, k, m)]


def merge_subblocks(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate sub-blocks back into the full message."""
    if not blocks:
        raise ValueError("no sub-blocks to merge")
    return np.concatenate([np.asarray(b) for b in blocks], axis=-1)


def random_bits(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Uniform i.i.d. message bits."""
    return rng.integers(0, 2, size=shape, dtype=np.int64)
