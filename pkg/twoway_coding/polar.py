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
Polar codes with successive-cancellation decoding: the open-loop baseline.

The kernel is applied in natural order, x = [enc(u_a) xor enc(u_b), enc(u_b)]
for the two halves u_a, u_b of u. Lengths T that are not powers of two use
the next power of two N with N - T randomly punctured positions whose LLRs
are zero.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelConfig, ChannelStreams
from .errors import ShapeError
from .harness.bler import run_trials

logger = logging.getLogger(__name__)

LLR_MAX = 30.0
NOISELESS_LLR = LLR_MAX


@dataclass(frozen=True)
class PolarSpec:
    """A (T, K) polar code built from a length-N mother code."""

    block_len: int
    info_count: int
    frozen: Tuple[int, ...]
    design_snr_db: float
    transmit_len: int
    punctured: Tuple[int, ...] = ()

    def __post_init__(self):
        n = self.block_len
        if n < 1 or n & (n - 1):
            raise ValueError(f"block length {n} is not a power of two")
        if len(self.frozen) != n - self.info_count:
            raise ValueError(
                f"{len(self.frozen)} frozen positions for N={n}, K={self.info_count}"
            )
        if self.transmit_len + len(self.punctured) != n:
            raise ValueError("transmit_len plus punctured positions must equal N")

    @property
    def info_positions(self) -> np.ndarray:
        frozen = set(self.frozen)
        return np.array([i for i in range(self.block_len) if i not in frozen], dtype=np.int64)

    @property
    def kept_positions(self) -> np.ndarray:
        punctured = set(self.punctured)
        return np.array(
            [i for i in range(self.block_len) if i not in punctured], dtype=np.int64
        )

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.block_len, dtype=bool)
        mask[list(self.frozen)] = True
        return mask


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def bhattacharyya(z: np.ndarray) -> np.ndarray:
    """
    Bhattacharyya parameters of the synthetic channels seen by each u position.

    Args:
        z: Per-position parameters of the N physical channels

    Returns:
        Length-N array, indexed like u
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size == 1:
        return z.copy()
    h = z.size // 2
    a, b = z[:h], z[h:]
    return np.concatenate([bhattacharyya(a + b - a * b), bhattacharyya(a * b)])


def construct(
    block_len: int,
    info_count: int,
    design_snr_db: float,
    punctured: Sequence[int] = (),
    power: float = 1.0,
) -> Tuple[int, ...]:
    """
    Frozen set of the N - K least reliable synthetic channels.

    Args:
        block_len: N, a power of two
        info_count: K <= N
        design_snr_db: SNR of the physical channel
        punctured: Positions that are never transmitted (parameter 1)
        power: Transmit power

    Returns:
        Sorted tuple of frozen u positions
    """
    if not _is_power_of_two(block_len):
        raise ValueError(f"block length {block_len} is not a power of two")
    if not 0 <= info_count <= block_len:
        raise ValueError(f"cannot place K={info_count} bits in N={block_len}")
    sigma_sq = power * 10.0 ** (-design_snr_db / 10.0)
    z0 = math.exp(-power / (2.0 * sigma_sq)) if sigma_sq > 0 else 0.0
    z = np.full(block_len, z0)
    z[list(punctured)] = 1.0
    reliability = bhattacharyya(z)
    # stable sort keeps the lower index first among ties
    order = np.argsort(-reliability, kind="stable")
    return tuple(sorted(int(i) for i in order[: block_len - info_count]))


def make_polar_spec(
    transmit_len: int,
    info_count: int,
    design_snr_db: float,
    seed: int = 0,
    power: float = 1.0,
) -> PolarSpec:
    """(T, K) code on the next power of two with seeded random puncturing."""
    if transmit_len < info_count:
        raise ValueError(f"T={transmit_len} channel uses cannot carry K={info_count} bits")
    n = 1 << max(0, (transmit_len - 1).bit_length())
    rng = np.random.default_rng(seed)
    punctured = tuple(sorted(int(i) for i in rng.choice(n, size=n - transmit_len, replace=False)))
    frozen = construct(n, info_count, design_snr_db, punctured, power)
    return PolarSpec(
        block_len=n,
        info_count=info_count,
        frozen=frozen,
        design_snr_db=design_snr_db,
        transmit_len=transmit_len,
        punctured=punctured,
    )


def polar_transform(u: np.ndarray) -> np.ndarray:
    """x = [T(u_a) xor T(u_b), T(u_b)] over the last axis."""
    u = np.asarray(u, dtype=np.int64)
    n = u.shape[-1]
    if n == 1:
        return u.copy()
    h = n // 2
    upper = polar_transform(u[..., :h])
    lower = polar_transform(u[..., h:])
    return np.concatenate([upper ^ lower, lower], axis=-1)


def encode(bits, spec: PolarSpec, power: float = 1.0) -> np.ndarray:
    """
    BPSK codeword for K message bits.

    Args:
        bits: Message bits, shape (..., K)
        spec: Code description
        power: Symbol power P (amplitude sqrt(P))

    Returns:
        (..., T) symbols in {+sqrt(P), -sqrt(P)}; bit 0 maps to +sqrt(P)
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] != spec.info_count:
        raise ShapeError(f"expected {spec.info_count} bits, got {bits.shape[-1]}")
    u = np.zeros(bits.shape[:-1] + (spec.block_len,), dtype=np.int64)
    u[..., spec.info_positions] = bits
    x = polar_transform(u)[..., spec.kept_positions]
    return math.sqrt(power) * (1.0 - 2.0 * x)


def channel_llrs(received, spec: PolarSpec, sigma_sq: float, power: float = 1.0) -> np.ndarray:
    """Length-N LLRs log p(y|0)/p(y|1); punctured positions get 0."""
    received = np.asarray(received, dtype=np.float64)
    if received.shape[-1] != spec.transmit_len:
        raise ShapeError(f"expected {spec.transmit_len} received symbols, got {received.shape[-1]}")
    if sigma_sq > 0:
        kept = 2.0 * math.sqrt(power) * received / sigma_sq
    else:
        kept = np.sign(received) * NOISELESS_LLR
    llrs = np.zeros(received.shape[:-1] + (spec.block_len,))
    llrs[..., spec.kept_positions] = np.clip(kept, -LLR_MAX, LLR_MAX)
    return llrs


def _check_node(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact f(x, y) = 2 atanh(tanh(x/2) tanh(y/2)) in log-domain form."""
    x = np.clip(x, -LLR_MAX, LLR_MAX)
    y = np.clip(y, -LLR_MAX, LLR_MAX)
    m = np.maximum(x, y)
    return np.logaddexp(0.0, x + y) - (m + np.log(np.exp(x - m) + np.exp(y - m)))


def _variable_node(x: np.ndarray, y: np.ndarray, u_hat: np.ndarray) -> np.ndarray:
    return (1.0 - 2.0 * u_hat) * x + y


def _sc(llrs: np.ndarray, frozen: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (u_hat, re-encoded partial sums) for a (batch, n) node."""
    n = frozen.shape[0]
    if n == 1:
        if frozen[0]:
            u = np.zeros((llrs.shape[0], 1), dtype=np.int64)
        else:
            u = (llrs < 0).astype(np.int64)
        return u, u
    h = n // 2
    l1, l2 = llrs[:, :h], llrs[:, h:]
    u1, x1 = _sc(_check_node(l1, l2), frozen[:h])
    u2, x2 = _sc(_variable_node(l1, l2, x1), frozen[h:])
    return np.concatenate([u1, u2], axis=1), np.concatenate([x1 ^ x2, x2], axis=1)


def sc_decode(llrs, spec: PolarSpec) -> np.ndarray:
    """
    Successive-cancellation decoding with frozen positions forced to 0.

    Args:
        llrs: Channel LLRs, shape (..., N)
        spec: Code description

    Returns:
        Decoded message bits, shape (..., K)
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape[-1] != spec.block_len:
        raise ShapeError(f"expected {spec.block_len} LLRs, got {llrs.shape[-1]}")
    lead = llrs.shape[:-1]
    u, _ = _sc(llrs.reshape(-1, spec.block_len), spec.frozen_mask)
    return u[:, spec.info_positions].reshape(lead + (spec.info_count,))


def codebook(spec: PolarSpec) -> Tuple[np.ndarray, np.ndarray]:
    """All 2^K messages and their length-N codewords in {0, 1}."""
    messages = np.array(list(itertools.product((0, 1), repeat=spec.info_count)), dtype=np.int64)
    u = np.zeros((messages.shape[0], spec.block_len), dtype=np.int64)
    u[:, spec.info_positions] = messages
    return messages, polar_transform(u)


def ml_decode(llrs, spec: PolarSpec) -> np.ndarray:
    """Maximum-likelihood decoding by exhaustive codebook search."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape[-1] != spec.block_len:
        raise ShapeError(f"expected {spec.block_len} LLRs, got {llrs.shape[-1]}")
    messages, words = codebook(spec)
    lead = llrs.shape[:-1]
    scores = llrs.reshape(-1, spec.block_len) @ (1.0 - 2.0 * words).T
    return messages[np.argmax(scores, axis=1)].reshape(lead + (spec.info_count,))


class PolarOpenLoopCoder:
    """Both users polar-encode K bits over T uses with no feedback.

    Codes are constructed per direction at the evaluation SNR and cached.
    """

    tokens_per_episode = 1
    single_user = False

    def __init__(
        self,
        message_len: int,
        transmit_len: int,
        seed: int = 0,
        decoder: str = "sc",
        name: str = "polar-ol",
    ):
        if decoder not in ("sc", "ml"):
            raise ValueError(f"unknown polar decoder {decoder!r}")
        self.name = name
        self.message_len = message_len
        self.sub_block_len = message_len
        self.transmit_len = transmit_len
        self.seed = seed
        self.decoder = decoder
        self._specs: Dict[Tuple[float, float], PolarSpec] = {}

    def spec_for(self, snr_db: float, power: float = 1.0) -> PolarSpec:
        key = (float(snr_db), float(power))
        if key not in self._specs:
            self._specs[key] = make_polar_spec(
                self.transmit_len, self.message_len, snr_db, seed=self.seed, power=power
            )
        return self._specs[key]

    def _send(
        self, bits, snr_db: float, sigma_sq: float, power: float, rng: np.random.Generator
    ) -> np.ndarray:
        spec = self.spec_for(snr_db, power)
        symbols = encode(bits, spec, power)
        received = symbols + rng.standard_normal(symbols.shape) * math.sqrt(sigma_sq)
        llrs = channel_llrs(received, spec, sigma_sq, power)
        if self.decoder == "ml":
            return ml_decode(llrs, spec)
        return sc_decode(llrs, spec)

    def transmit(self, blocks1, blocks2, channel: ChannelConfig, streams: ChannelStreams):
        hat1 = self._send(blocks1, channel.snr1_db, channel.sigma1_sq, channel.power1, streams.rng1)
        hat2 = self._send(blocks2, channel.snr2_db, channel.sigma2_sq, channel.power2, streams.rng2)
        return hat1, hat2


@dataclass(frozen=True)
class OpenLoopResult:
    bler_1: float
    bler_2: float
    trials: int

    @property
    def sum_bler(self) -> float:
        return self.bler_1 + self.bler_2


def open_loop_bler(
    message_len: int,
    transmit_len: int,
    channel: ChannelConfig,
    trials: int,
    seed: int = 0,
    decoder: str = "sc",
) -> OpenLoopResult:
    """
    Per-direction and sum BLER of the open-loop polar baseline.

    Args:
        message_len: K bits per user
        transmit_len: T channel uses per user
        channel: SNRs and powers of both directions
        trials: Messages per user
        seed: Seed for bits, noise and puncturing
        decoder: "sc" or "ml"

    Returns:
        OpenLoopResult
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    coder = PolarOpenLoopCoder(message_len, transmit_len, seed=seed, decoder=decoder)
    errors1, errors2 = run_trials(coder, channel, trials, ChannelStreams(seed))
    return OpenLoopResult(errors1 / trials, errors2 / trials, trials)
